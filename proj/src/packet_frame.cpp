#include "heatpack/packet_frame.hpp"

#include "heatpack/error.hpp"
#include "heatpack/parallel.hpp"
#include "heatpack/quadrature.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <map>
#include <mutex>

namespace heatpack {

namespace {

double raw_profile(double r2)
{
    if (r2 >= 1.0)
        return 0.0;
    return std::exp(-1.0 / (1.0 - r2));
}

double compute_normalization(int dim)
{
    // integral of raw^2 over the unit ball, radially
    const Nodes1d q = composite_gauss(0.0, 1.0, 200, 20);
    double s = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        const double r = q.x[i];
        const double v = raw_profile(r * r);
        s += q.w[i] * v * v * (dim == 1 ? 2.0 : 2.0 * M_PI * r);
    }
    return 1.0 / std::sqrt(s);
}

// Max over multi-indices |alpha| <= order of sup |D^alpha f| on a uniform grid.
double sup_derivatives(int dim, int order, double h)
{
    const int n = static_cast<int>(std::lround(2.0 / h)) + 1;
    const double A = bump_normalization(dim);
    if (dim == 1) {
        std::vector<double> f(n);
        for (int i = 0; i < n; ++i) {
            const double y = -1.0 + i * h;
            f[i] = A * raw_profile(y * y);
        }
        double best = 0.0;
        for (int m = 0; m <= order; ++m) {
            for (double v : f)
                best = std::max(best, std::abs(v));
            std::vector<double> g(f.size() - 2);
            for (std::size_t i = 0; i + 2 < f.size(); ++i)
                g[i] = (f[i + 2] - f[i]) / (2.0 * h);
            f = std::move(g);
        }
        return best;
    }
    // 2-D: f stored row-major (x slow, y fast)
    std::vector<double> base(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = -1.0 + i * h, y = -1.0 + j * h;
            base[static_cast<std::size_t>(i) * n + j] = A * raw_profile(x * x + y * y);
        }
    double best = 0.0;
    std::vector<double> fx = base;
    int nx = n;
    for (int a = 0; a <= order; ++a) {
        std::vector<double> f = fx;
        int ny = n;
        for (int b = 0; a + b <= order; ++b) {
            for (double v : f)
                best = std::max(best, std::abs(v));
            if (a + b == order)
                break;
            std::vector<double> g(static_cast<std::size_t>(nx) * (ny - 2));
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j + 2 < ny; ++j)
                    g[static_cast<std::size_t>(i) * (ny - 2) + j] =
                        (f[static_cast<std::size_t>(i) * ny + j + 2] - f[static_cast<std::size_t>(i) * ny + j]) /
                        (2.0 * h);
            f = std::move(g);
            ny -= 2;
        }
        if (a == order)
            break;
        std::vector<double> g(static_cast<std::size_t>(nx - 2) * n);
        for (int i = 0; i + 2 < nx; ++i)
            for (int j = 0; j < n; ++j)
                g[static_cast<std::size_t>(i) * n + j] =
                    (fx[static_cast<std::size_t>(i + 2) * n + j] - fx[static_cast<std::size_t>(i) * n + j]) / (2.0 * h);
        fx = std::move(g);
        nx -= 2;
    }
    return best;
}

BumpNorms compute_norms(int dim)
{
    BumpNorms b;
    b.c0 = bump_normalization(dim) * std::exp(-1.0);
    b.s = dim / 2 + 1;
    const double h = dim == 1 ? 1e-3 : 4e-3;
    b.cd = sup_derivatives(dim, dim, h);
    b.c2s = sup_derivatives(dim, 2 + b.s, h);
    return b;
}

} // namespace

double bump_normalization(int dim)
{
    static const double a1 = compute_normalization(1);
    static const double a2 = compute_normalization(2);
    return dim == 1 ? a1 : a2;
}

double bump_profile(const Point& y, int dim)
{
    return bump_normalization(dim) * raw_profile(norm2(y, dim));
}

const BumpNorms& bump_norms(int dim)
{
    static std::mutex guard;
    static std::map<int, BumpNorms> cache;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(dim);
    if (it == cache.end())
        it = cache.emplace(dim, compute_norms(dim)).first;
    return it->second;
}

double BumpSpec::operator()(const Point& x) const
{
    Point y{};
    for (int k = 0; k < dim; ++k)
        y[k] = (x[k] - center[k]) / epsilon0;
    return std::pow(epsilon0, -0.5 * dim) * bump_profile(y, dim);
}

void BumpSpec::validate(const BoxDomain& omega) const
{
    if (profile != "bump")
        fail(ErrorKind::ConfigError, "unknown bump profile '" + profile + "'");
    if (dim != omega.dim)
        fail(ErrorKind::ConfigError, "bump and domain dimensions differ");
    double diam2 = 0.0;
    for (int k = 0; k < dim; ++k)
        diam2 += omega.extent(k) * omega.extent(k);
    if (!(epsilon0 > 0.0) || !(epsilon0 < 0.5 * std::sqrt(diam2)))
        fail(ErrorKind::PreconditionViolation, "need 0 < epsilon0 < diam(Omega)/2");
    if (!(std::sqrt(epsilon0) < delta) || !(delta < 1.0))
        fail(ErrorKind::PreconditionViolation, "need sqrt(epsilon0) < delta < 1");
    if (!omega.contains(center))
        fail(ErrorKind::PreconditionViolation, "bump center outside Omega");
    const double clearance = omega.distance_to_boundary(center) - epsilon0;
    if (clearance < delta * (1.0 - 1e-12))
        fail(ErrorKind::PreconditionViolation,
             "bump support closer than delta to the boundary (clearance " + format_double(clearance) + ")");
}

const char* mode_name(TruncationMode m) { return m == TruncationMode::Box ? "box" : "band"; }

TruncationMode parse_mode(const std::string& s)
{
    if (s == "box")
        return TruncationMode::Box;
    if (s == "band")
        return TruncationMode::Band;
    fail(ErrorKind::ConfigError, "mode must be box or band");
}

const char* policy_name(EpsilonPolicy p)
{
    switch (p) {
    case EpsilonPolicy::Measured: return "measured";
    case EpsilonPolicy::Ob1: return "ob1";
    case EpsilonPolicy::Fixed: return "fixed";
    }
    return "?";
}

EpsilonPolicy parse_policy(const std::string& s)
{
    if (s == "measured")
        return EpsilonPolicy::Measured;
    if (s == "ob1")
        return EpsilonPolicy::Ob1;
    if (s == "fixed")
        return EpsilonPolicy::Fixed;
    fail(ErrorKind::ConfigError, "eps_policy must be measured, ob1 or fixed");
}

double FrameParams::loglog() const { return std::log(log_inv_epsilon); }

Point FrameParams::xi(const Lattice& n) const
{
    Point x{};
    for (int k = 0; k < dim; ++k)
        x[k] = n[k] / L;
    return x;
}

namespace {

struct Radii {
    double hi = 0.0;
    double lo = 0.0; // band only
};

Radii radii(const FrameParams& p, const BumpSpec& bump)
{
    const double K = p.loglog();
    Radii r;
    r.hi = p.L * K / bump.epsilon0 * (1.0 + 1e-12);
    if (p.mode == TruncationMode::Band)
        r.lo = p.L / (bump.epsilon0 * K) * (1.0 - 1e-12);
    return r;
}

bool lattice_less(const Lattice& a, const Lattice& b, int dim)
{
    const long na = lattice_norm2(a, dim), nb = lattice_norm2(b, dim);
    if (na != nb)
        return na < nb;
    for (int k = 0; k < dim; ++k)
        if (a[k] != b[k])
            return a[k] < b[k];
    return false;
}

} // namespace

std::vector<Lattice> truncation_set(const FrameParams& p, const BumpSpec& bump)
{
    const Radii r = radii(p, bump);
    const int nmax = static_cast<int>(std::floor(r.hi));
    const double hi2 = r.hi * r.hi, lo2 = r.lo * r.lo;
    std::vector<Lattice> S;
    if (p.dim == 1) {
        for (int n = -nmax; n <= nmax; ++n) {
            const double q = static_cast<double>(n) * n;
            if (q <= hi2 && q >= lo2)
                S.push_back({n, 0});
        }
    } else {
        for (int a = -nmax; a <= nmax; ++a)
            for (int b = -nmax; b <= nmax; ++b) {
                const double q = static_cast<double>(a) * a + static_cast<double>(b) * b;
                if (q <= hi2 && q >= lo2)
                    S.push_back({a, b});
            }
    }
    if (S.empty())
        fail(ErrorKind::EmptySet, "truncation cutoffs leave no lattice points");
    std::sort(S.begin(), S.end(), [&](const Lattice& a, const Lattice& b) { return lattice_less(a, b, p.dim); });
    return S;
}

std::size_t truncation_count(const FrameParams& p, const BumpSpec& bump)
{
    const Radii r = radii(p, bump);
    auto count_disk = [&](double R, bool strict) -> std::size_t {
        if (R < 0.0)
            return 0;
        const long nmax = static_cast<long>(std::floor(R));
        if (p.dim == 1) {
            long c = 2 * nmax + 1;
            if (strict && static_cast<double>(nmax) == R)
                c -= 2;
            return static_cast<std::size_t>(std::max(0L, c));
        }
        std::size_t c = 0;
        for (long a = -nmax; a <= nmax; ++a) {
            const double rem = R * R - static_cast<double>(a) * a;
            long m = static_cast<long>(std::floor(std::sqrt(std::max(0.0, rem))));
            if (strict)
                while (m >= 0 && static_cast<double>(a) * a + static_cast<double>(m) * m >= R * R)
                    --m;
            if (m >= 0)
                c += static_cast<std::size_t>(2 * m + 1);
        }
        return c;
    };
    std::size_t total = count_disk(r.hi, false);
    if (p.mode == TruncationMode::Band && r.lo > 0.0)
        total -= count_disk(r.lo, true);
    return total;
}

FrameParams params_for(const BumpSpec& bump, double eta, double log_inv_epsilon, TruncationMode mode, int k)
{
    if (!(log_inv_epsilon > 1.0))
        fail(ErrorKind::PreconditionViolation, "need epsilon < 1/e so that loglog(1/epsilon) > 0");
    FrameParams p;
    p.dim = bump.dim;
    p.epsilon0 = bump.epsilon0;
    p.delta = bump.delta;
    p.eta = eta;
    p.log_inv_epsilon = log_inv_epsilon;
    p.epsilon = std::exp(-log_inv_epsilon);
    p.sigma = std::sqrt(bump.epsilon0 * bump.delta) * log_inv_epsilon;
    p.L = p.sigma * std::log(log_inv_epsilon);
    p.mode = mode;
    p.k = k;
    p.M1 = bump_norms(bump.dim).cd;
    return p;
}

// ---------------------------------------------------------------------------
// Coefficients

namespace {

// Dense coefficients over [-nmax, nmax]^d for a fixed quadrature.
std::vector<cplx> dense_coefficients(const BumpSpec& bump, const FrameParams& p, int nmax, int panels)
{
    const int order = 16;
    const Nodes1d q = composite_gauss(-bump.epsilon0, bump.epsilon0, panels, order);
    const std::size_t Q = q.x.size();
    const int width = 2 * nmax + 1;
    const double s2 = p.sigma * p.sigma;
    const double pref = std::pow(2.0 * M_PI * s2, 0.25 * p.dim) / std::pow(2.0 * M_PI * p.L, p.dim);
    std::vector<cplx> dense(p.dim == 1 ? width : static_cast<std::size_t>(width) * width);

    if (p.dim == 1) {
        std::vector<double> f(Q);
        for (std::size_t i = 0; i < Q; ++i) {
            Point x{bump.center[0] + q.x[i], 0.0};
            f[i] = q.w[i] * bump(x) * std::exp(q.x[i] * q.x[i] / (4.0 * s2));
        }
        const std::size_t blocks = std::min<std::size_t>(width, 64);
        const std::size_t bs = (width + blocks - 1) / blocks;
        parallel_for(blocks, [&](std::size_t b) {
            const int n0 = static_cast<int>(b * bs);
            const int n1 = std::min(width, static_cast<int>((b + 1) * bs));
            for (std::size_t i = 0; i < Q; ++i) {
                if (f[i] == 0.0)
                    continue;
                const double th = -q.x[i] / p.L;
                const cplx z = std::polar(1.0, th);
                cplx pw = std::polar(1.0, th * (n0 - nmax));
                for (int j = n0; j < n1; ++j) {
                    dense[j] += f[i] * pw;
                    pw *= z;
                }
            }
        });
        for (auto& v : dense)
            v *= pref;
        return dense;
    }

    // 2-D: separable phase, non-separable weight.
    std::vector<cplx> E(Q * width);
    for (std::size_t i = 0; i < Q; ++i)
        for (int j = 0; j < width; ++j)
            E[i * width + j] = std::polar(1.0, -(j - nmax) * q.x[i] / p.L);
    std::vector<cplx> B(Q * width);
    parallel_for(Q, [&](std::size_t i1) {
        for (std::size_t i2 = 0; i2 < Q; ++i2) {
            Point x{bump.center[0] + q.x[i1], bump.center[1] + q.x[i2]};
            const double v = bump(x);
            if (v == 0.0)
                continue;
            const double f = q.w[i1] * q.w[i2] * v *
                             std::exp((q.x[i1] * q.x[i1] + q.x[i2] * q.x[i2]) / (4.0 * s2));
            for (int j = 0; j < width; ++j)
                B[i1 * width + j] += f * E[i2 * width + j];
        }
    });
    parallel_for(width, [&](std::size_t j1) {
        for (int j2 = 0; j2 < width; ++j2) {
            cplx acc = 0.0;
            for (std::size_t i1 = 0; i1 < Q; ++i1)
                acc += E[i1 * width + j1] * B[i1 * width + j2];
            dense[j1 * width + j2] = pref * acc;
        }
    });
    return dense;
}

std::vector<cplx> converged_dense(const BumpSpec& bump, const FrameParams& p, int nmax)
{
    if (bump.epsilon0 > 0.5 * M_PI * p.L)
        fail(ErrorKind::SupportViolation, "bump support exceeds the period box [-pi L/2, pi L/2]^d");
    const int cap = p.dim == 1 ? 256 : 64;
    std::vector<cplx> prev = dense_coefficients(bump, p, nmax, 4);
    for (int panels = 8; panels <= cap; panels *= 2) {
        std::vector<cplx> cur = dense_coefficients(bump, p, nmax, panels);
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            diff = std::max(diff, std::abs(cur[i] - prev[i]));
            scale = std::max(scale, std::abs(cur[i]));
        }
        if (diff <= 1e-10 * scale)
            return cur;
        prev = std::move(cur);
    }
    fail(ErrorKind::QuadratureNonConvergence, "coefficient quadrature did not converge");
}

std::size_t dense_index(const Lattice& n, int nmax, int dim)
{
    const int width = 2 * nmax + 1;
    if (dim == 1)
        return static_cast<std::size_t>(n[0] + nmax);
    return static_cast<std::size_t>(n[0] + nmax) * width + (n[1] + nmax);
}

} // namespace

cplx coefficient(const Lattice& n, const BumpSpec& bump, const FrameParams& params)
{
    int nmax = 0;
    for (int k = 0; k < params.dim; ++k)
        nmax = std::max(nmax, std::abs(n[k]));
    const std::vector<cplx> dense = converged_dense(bump, params, nmax);
    return dense[dense_index(n, nmax, params.dim)];
}

std::vector<cplx> coefficients(const BumpSpec& bump, const FrameParams& params)
{
    int nmax = 0;
    for (const auto& n : params.S)
        for (int k = 0; k < params.dim; ++k)
            nmax = std::max(nmax, std::abs(n[k]));
    const std::vector<cplx> dense = converged_dense(bump, params, nmax);
    std::vector<cplx> c(params.S.size());
    for (std::size_t i = 0; i < params.S.size(); ++i)
        c[i] = dense[dense_index(params.S[i], nmax, params.dim)];
    return c;
}

// ---------------------------------------------------------------------------
// Reconstruction error

double frame_error(const Frame& frame, const BumpSpec& bump, const BoxDomain& omega, int resolution, int order)
{
    const FrameParams& p = frame.params;
    const int dim = p.dim;
    int nmax = 0;
    for (const auto& n : p.S)
        for (int k = 0; k < dim; ++k)
            nmax = std::max(nmax, std::abs(n[k]));
    const int width = 2 * nmax + 1;
    std::vector<cplx> dense(dim == 1 ? width : static_cast<std::size_t>(width) * width);
    for (std::size_t i = 0; i < p.S.size(); ++i)
        dense[dense_index(p.S[i], nmax, dim)] = frame.c[i];

    const double s2 = p.sigma * p.sigma;
    const double gpref = std::pow(2.0 * M_PI * s2, -0.25 * dim);
    std::array<Nodes1d, kMaxDim> ax;
    for (int k = 0; k < dim; ++k)
        ax[k] = composite_gauss(omega.lo[k], omega.hi[k], resolution, order);

    if (dim == 1) {
        const std::size_t Q = ax[0].x.size();
        std::vector<double> err(Q), ref(Q);
        parallel_for(Q, [&](std::size_t i) {
            const double y = ax[0].x[i] - frame.x0[0];
            const double th = y / p.L;
            const cplx z = std::polar(1.0, th);
            cplx pw = std::polar(1.0, -th * nmax);
            cplx acc = 0.0;
            for (int j = 0; j < width; ++j) {
                acc += dense[j] * pw;
                pw *= z;
            }
            const cplx rec = gpref * std::exp(-y * y / (4.0 * s2)) * acc;
            const double psi = bump(Point{ax[0].x[i], 0.0});
            err[i] = ax[0].w[i] * std::norm(psi - rec);
            ref[i] = ax[0].w[i] * psi * psi;
        });
        double e = 0.0, r = 0.0;
        for (std::size_t i = 0; i < Q; ++i) {
            e += err[i];
            r += ref[i];
        }
        return std::sqrt(e / r);
    }

    const std::size_t Q1 = ax[0].x.size(), Q2 = ax[1].x.size();
    auto table = [&](const Nodes1d& nodes, double c0) {
        std::vector<cplx> E(nodes.x.size() * width);
        for (std::size_t i = 0; i < nodes.x.size(); ++i)
            for (int j = 0; j < width; ++j)
                E[i * width + j] = std::polar(1.0, (j - nmax) * (nodes.x[i] - c0) / p.L);
        return E;
    };
    const std::vector<cplx> E1 = table(ax[0], frame.x0[0]);
    const std::vector<cplx> E2 = table(ax[1], frame.x0[1]);
    std::vector<cplx> B(Q1 * width);
    parallel_for(Q1, [&](std::size_t i1) {
        for (int j1 = 0; j1 < width; ++j1) {
            const cplx e = E1[i1 * width + j1];
            const cplx* row = &dense[static_cast<std::size_t>(j1) * width];
            for (int j2 = 0; j2 < width; ++j2)
                B[i1 * width + j2] += row[j2] * e;
        }
    });
    std::vector<double> err(Q1), ref(Q1);
    parallel_for(Q1, [&](std::size_t i1) {
        double e = 0.0, r = 0.0;
        const double y1 = ax[0].x[i1] - frame.x0[0];
        for (std::size_t i2 = 0; i2 < Q2; ++i2) {
            const double y2 = ax[1].x[i2] - frame.x0[1];
            cplx acc = 0.0;
            for (int j2 = 0; j2 < width; ++j2)
                acc += B[i1 * width + j2] * E2[i2 * width + j2];
            const cplx rec = gpref * std::exp(-(y1 * y1 + y2 * y2) / (4.0 * s2)) * acc;
            const double psi = bump(Point{ax[0].x[i1], ax[1].x[i2]});
            const double w = ax[0].w[i1] * ax[1].w[i2];
            e += w * std::norm(psi - rec);
            r += w * psi * psi;
        }
        err[i1] = e;
        ref[i1] = r;
    });
    double e = 0.0, r = 0.0;
    for (std::size_t i = 0; i < Q1; ++i) {
        e += err[i];
        r += ref[i];
    }
    return std::sqrt(e / r);
}

// ---------------------------------------------------------------------------
// Parameter selection

namespace {

Frame assemble(const BumpSpec& bump, double eta, double ell, const EpsilonSearch& search)
{
    Frame f;
    f.params = params_for(bump, eta, ell, search.mode, search.k);
    f.params.S = truncation_set(f.params, bump);
    f.x0 = bump.center;
    f.c = coefficients(bump, f.params);
    f.measured_error = frame_error(f, bump, search.omega, search.resolution);
    return f;
}

double ell_of_K(double K) { return std::exp(K); }

} // namespace

FrameParams frame_params(const BumpSpec& bump, double eta, const EpsilonSearch& search)
{
    if (!(eta > 0.0 && eta < 1.0))
        fail(ErrorKind::PreconditionViolation, "eta must lie in (0, 1)");
    const double ell_floor = -std::log(DBL_MIN); // smallest representable epsilon
    const double K_floor = std::log(ell_floor);
    const double K_lo = 1.0; // epsilon = e^{-e}
    const int d = bump.dim;

    auto budget_ok = [&](double K) {
        FrameParams p = params_for(bump, eta, ell_of_K(K), search.mode, search.k);
        return truncation_count(p, bump) <= search.max_modes;
    };
    auto finish = [&](double ell) {
        FrameParams p = params_for(bump, eta, ell, search.mode, search.k);
        p.S = truncation_set(p, bump);
        return p;
    };

    switch (search.policy) {
    case EpsilonPolicy::Fixed: {
        const double e = search.fixed_epsilon;
        if (!(e > 0.0 && e < std::exp(-1.0)))
            fail(ErrorKind::PreconditionViolation, "fixed epsilon must lie in (0, 1/e)");
        return finish(-std::log(e));
    }
    case EpsilonPolicy::Ob1: {
        const double M1 = bump_norms(d).cd;
        auto ok = [&](double K) { return std::pow(K, -d) * M1 < eta / 10.0; };
        if (!ok(K_floor))
            fail(ErrorKind::NoFeasibleEpsilon,
                 "condition (ob1) fails even at the smallest representable epsilon: loglog = " +
                     format_double(K_floor) + ", need > " + format_double(std::pow(10.0 * M1 / eta, 1.0 / d)),
                 {K_floor, M1});
        double lo = K_lo, hi = K_floor;
        if (!ok(lo)) {
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (ok(mid) ? hi : lo) = mid;
            }
        } else {
            hi = lo;
        }
        if (!budget_ok(hi))
            fail(ErrorKind::NoFeasibleEpsilon, "epsilon satisfying (ob1) exceeds the mode budget", {hi});
        return finish(ell_of_K(hi));
    }
    case EpsilonPolicy::Measured: {
        // Largest K allowed by the machine floor and the mode budget.
        double K_cap = K_floor;
        if (!budget_ok(K_cap)) {
            double lo = K_lo, hi = K_floor;
            if (!budget_ok(lo))
                fail(ErrorKind::NoFeasibleEpsilon, "mode budget too small for any epsilon");
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (budget_ok(mid) ? lo : hi) = mid;
            }
            K_cap = lo;
        }
        auto err = [&](double K) { return assemble(bump, eta, ell_of_K(K), search).measured_error; };
        // Walk up in K (cheap end first), then bisect the last bracket.
        double lo = K_lo;
        double e = err(lo);
        if (e <= eta)
            return finish(ell_of_K(lo));
        double hi = lo;
        for (;;) {
            const double next = std::min(K_cap, hi + 0.5);
            if (next <= hi)
                fail(ErrorKind::NoFeasibleEpsilon,
                     "frame error " + format_double(e) + " > eta at the smallest admissible epsilon (loglog = " +
                         format_double(K_cap) + ")",
                     {e, K_cap});
            lo = hi;
            hi = next;
            e = err(hi);
            if (e <= eta)
                break;
        }
        while (hi - lo > 1e-3) {
            const double mid = 0.5 * (lo + hi);
            (err(mid) <= eta ? hi : lo) = mid;
        }
        return finish(ell_of_K(hi));
    }
    }
    fail(ErrorKind::ConfigError, "unknown epsilon policy");
}

Frame build_frame(const BumpSpec& bump, double eta, const EpsilonSearch& search)
{
    bump.validate(search.omega);
    const FrameParams p = frame_params(bump, eta, search);
    Frame f;
    f.params = p;
    f.x0 = bump.center;
    f.c = coefficients(bump, f.params);
    f.measured_error = frame_error(f, bump, search.omega, search.resolution);
    if (f.measured_error > eta)
        fail(ErrorKind::FrameErrorExceeded,
             "measured frame error " + format_double(f.measured_error) + " exceeds eta " + format_double(eta),
             {f.measured_error});
    return f;
}

FrameOutcome build_frame_or_best(const BumpSpec& bump, double eta, const EpsilonSearch& search)
{
    FrameOutcome out;
    try {
        out.frame = build_frame(bump, eta, search);
        out.certified = true;
        return out;
    } catch (const Error& e) {
        if (search.policy != EpsilonPolicy::Measured || e.kind() != ErrorKind::NoFeasibleEpsilon ||
            e.values().size() < 2)
            throw;
        out.note = e.what();
        out.frame = assemble(bump, eta, ell_of_K(e.values()[1]), search);
        return out;
    }
}

// ---------------------------------------------------------------------------
// Packets

HeatPacket packet(const Frame& frame, const Lattice& n)
{
    HeatPacket p;
    p.dim = frame.params.dim;
    p.x0 = frame.x0;
    p.xi = frame.params.xi(n);
    p.sigma = frame.params.sigma;
    return p;
}

cplx packet_value(const HeatPacket& p, double t, const Point& x)
{
    const double s = p.sigma * p.sigma + t;
    double dx2 = 0.0, xi2 = 0.0, xdx = 0.0;
    for (int k = 0; k < p.dim; ++k) {
        const double dx = x[k] - p.x0[k];
        dx2 += dx * dx;
        xi2 += p.xi[k] * p.xi[k];
        xdx += p.xi[k] * dx;
    }
    // -(dx^2 - 4 xi^2 t^2 + 4 i dx.xi t)/(4s) - t xi^2 + i xi.dx, split into parts
    const double re = -dx2 / (4.0 * s) + xi2 * t * t / s - t * xi2;
    const double im = xdx - xdx * t / s;
    const double pref = std::pow(p.sigma / (std::sqrt(2.0 * M_PI) * s), 0.5 * p.dim);
    return pref * std::exp(re) * std::polar(1.0, im);
}

double packet_modulus2_real_form(const HeatPacket& p, double t, const Point& x)
{
    const double s = p.sigma * p.sigma + t;
    double dx2 = 0.0, xi2 = 0.0;
    for (int k = 0; k < p.dim; ++k) {
        const double dx = x[k] - p.x0[k];
        dx2 += dx * dx;
        xi2 += p.xi[k] * p.xi[k];
    }
    return std::pow(p.sigma / (std::sqrt(2.0 * M_PI) * s), p.dim) *
           std::exp(-(dx2 - 4.0 * xi2 * t * t) / (2.0 * s)) * std::exp(-2.0 * xi2 * t);
}

cplx superpose(const Frame& frame, double t, const Point& x)
{
    cplx acc = 0.0;
    for (std::size_t i = 0; i < frame.params.S.size(); ++i)
        acc += frame.c[i] * packet_value(packet(frame, frame.params.S[i]), t, x);
    return acc;
}

ComplexField superpose_grid(const Frame& frame, double t, const BoxDomain& omega, const Resolution& res)
{
    ComplexField f(omega, res);
    parallel_for(f.size(), [&](std::size_t i) { f[i] = superpose(frame, t, f.center(i)); });
    return f;
}

DecayFit fit_decay(const Frame& frame, int k, double fit_limit)
{
    const FrameParams& p = frame.params;
    const double e0 = p.epsilon0;
    const double scale = std::pow(p.sigma * e0 / (p.L * p.L), 0.5 * p.dim);
    DecayFit fit;
    fit.k = k;
    auto shape = [&](const Lattice& n) {
        const double xi = std::sqrt(norm2(p.xi(n), p.dim));
        return scale * std::pow(e0 * xi, -k);
    };
    for (std::size_t i = 0; i < p.S.size(); ++i) {
        const Lattice& n = p.S[i];
        if (lattice_norm2(n, p.dim) == 0)
            continue;
        const double xi = std::sqrt(norm2(p.xi(n), p.dim));
        if (e0 * xi <= fit_limit) {
            fit.C = std::max(fit.C, std::abs(frame.c[i]) / shape(n));
            ++fit.fitted;
        }
    }
    for (std::size_t i = 0; i < p.S.size(); ++i) {
        const Lattice& n = p.S[i];
        if (lattice_norm2(n, p.dim) == 0)
            continue;
        ++fit.checked;
        const double ratio = std::abs(frame.c[i]) / (fit.C * shape(n));
        fit.worst_ratio = std::max(fit.worst_ratio, ratio);
        if (ratio > 1.0 + 1e-12)
            ++fit.violations;
    }
    return fit;
}

} // namespace heatpack
