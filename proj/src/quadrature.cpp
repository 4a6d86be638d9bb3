#include "heatpack/quadrature.hpp"

#include "heatpack/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace heatpack {

namespace {

GaussRule compute_gauss(int n)
{
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double pn = n == 1 ? x : p1;
            double pm = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
            double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double pn = n == 1 ? x : p1;
        double pm = n == 1 ? 1.0 : p0;
        dp = n * (x * pn - pm) / (x * x - 1.0);
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

} // namespace

const GaussRule& gauss_legendre(int order)
{
    static std::mutex guard;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, compute_gauss(order)).first;
    return it->second;
}

Nodes1d composite_gauss(double a, double b, int panels, int order)
{
    const GaussRule& g = gauss_legendre(order);
    Nodes1d out;
    out.x.reserve(static_cast<std::size_t>(panels) * order);
    out.w.reserve(static_cast<std::size_t>(panels) * order);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (int q = 0; q < order; ++q) {
            out.x.push_back(mid + 0.5 * h * g.x[q]);
            out.w.push_back(0.5 * h * g.w[q]);
        }
    }
    return out;
}

TimeMesh graded_simpson(double T, double ratio, double floor_rel)
{
    std::vector<double> breaks;
    const int K = static_cast<int>(std::ceil(std::log(1.0 / floor_rel) / std::log(ratio)));
    breaks.push_back(0.0);
    for (int k = K; k >= 1; --k)
        breaks.push_back(T * std::pow(ratio, -k));
    breaks.push_back(T);
    TimeMesh m;
    m.t.push_back(0.0);
    m.w.push_back(0.0);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        const double h = b - a;
        m.w.back() += h / 6.0;
        m.t.push_back(0.5 * (a + b));
        m.w.push_back(4.0 * h / 6.0);
        m.t.push_back(b);
        m.w.push_back(h / 6.0);
    }
    return m;
}

std::vector<double> refine_time_integrals(
    const std::function<std::vector<double>(const TimeMesh&)>& eval, double T, double rel_tol,
    int max_levels, const std::vector<int>& groups, double abs_floor)
{
    double ratio = 2.0;
    std::vector<double> prev = eval(graded_simpson(T, ratio));
    for (int level = 0; level < max_levels; ++level) {
        ratio = std::sqrt(ratio);
        std::vector<double> cur = eval(graded_simpson(T, ratio));
        std::vector<double> scale(cur.size());
        if (groups.empty()) {
            for (std::size_t i = 0; i < cur.size(); ++i)
                scale[i] = std::abs(cur[i]);
        } else {
            std::map<int, double> gmax;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                double& g = gmax[groups[i]];
                g = std::max(g, std::abs(cur[i]));
            }
            for (std::size_t i = 0; i < cur.size(); ++i)
                scale[i] = gmax[groups[i]];
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i)
            worst = std::max(worst, std::abs(cur[i] - prev[i]) / std::max(scale[i], abs_floor));
        if (worst < rel_tol)
            return cur;
        prev = std::move(cur);
    }
    fail(ErrorKind::QuadratureNonConvergence, "time quadrature did not reach the tolerance");
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth)
{
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth)
{
    // Coarse composite estimate sets the absolute scale.
    const int n = 64;
    double coarse = 0.0;
    std::vector<double> fx(n + 1);
    for (int i = 0; i <= n; ++i)
        fx[i] = f(a + (b - a) * i / n);
    for (int i = 0; i < n; i += 2)
        coarse += (b - a) / n / 3.0 * (fx[i] + 4.0 * fx[i + 1] + fx[i + 2]);
    const double tol = std::max(std::abs(coarse), 1e-300) * rel_tol;
    double total = 0.0;
    for (int i = 0; i < n; i += 2) {
        const double x0 = a + (b - a) * i / n, x2 = a + (b - a) * (i + 2) / n;
        const double x1 = 0.5 * (x0 + x2);
        const double whole = (x2 - x0) / 6.0 * (fx[i] + 4.0 * fx[i + 1] + fx[i + 2]);
        total += simpson_step(f, x0, fx[i], x2, fx[i + 2], x1, fx[i + 1], whole, tol / (n / 2),
                              max_depth);
    }
    return total;
}

} // namespace heatpack
