#include "heatpack/design_solver.hpp"

#include "heatpack/parallel.hpp"
#include "heatpack/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace heatpack {

// ---------------------------------------------------------------------------
// Densities

namespace {

// int_Omega g_T with g_t(x) = |phi_n(t,x)|^2 / A(t,n).
double whole_domain_mass(const FrameParams& p, const Point& x0, const BoxDomain& omega, const Resolution& res,
                         double t)
{
    return gauss_mass(space_rule(RealField(omega, res, 1.0), 4), x0, p.sigma, p.dim, t);
}

} // namespace

std::vector<PacketEnergyDensity> energy_densities(const Frame& frame, const std::vector<Lattice>& indices, double T,
                                                  const BoxDomain& omega, const Resolution& res, double rel_tol)
{
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "design horizon must be positive");
    if (indices.empty())
        fail(ErrorKind::EmptySet, "no packet indices");
    const FrameParams& p = frame.params;
    const int d = p.dim;
    const double s2 = p.sigma * p.sigma;

    std::map<long, std::size_t> class_of;
    std::vector<double> xi2;
    std::vector<std::size_t> cls(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const long key = lattice_norm2(indices[i], d);
        auto it = class_of.find(key);
        if (it == class_of.end()) {
            it = class_of.emplace(key, xi2.size()).first;
            xi2.push_back(norm2(p.xi(indices[i]), d));
        }
        cls[i] = it->second;
    }
    const std::size_t C = xi2.size();

    RealField grid(omega, res);
    const std::size_t G = grid.size();
    std::vector<double> r2(G);
    for (std::size_t i = 0; i < G; ++i) {
        const Point x = grid.center(i);
        double acc = 0.0;
        for (int k = 0; k < d; ++k)
            acc += (x[k] - frame.x0[k]) * (x[k] - frame.x0[k]);
        r2[i] = acc;
    }

    auto eval = [&](const TimeMesh& mesh) {
        const std::size_t K = mesh.t.size();
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(G));
        constexpr std::size_t chunk = 64;
        for (std::size_t t0 = 0; t0 < K; t0 += chunk) {
            const std::size_t nt = std::min(chunk, K - t0);
            Eigen::MatrixXd E(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(G));
            Eigen::MatrixXd A(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(nt));
            parallel_for(nt, [&](std::size_t q) {
                const double t = mesh.t[t0 + q], s = s2 + t;
                const double pref = std::pow(s2 / (2.0 * M_PI * s * s), 0.5 * d);
                for (std::size_t i = 0; i < G; ++i)
                    E(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i)) = pref * std::exp(-r2[i] / (2.0 * s));
                for (std::size_t c = 0; c < C; ++c)
                    A(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(q)) =
                        mesh.w[t0 + q] * std::exp(-2.0 * t * s2 * xi2[c] / s);
            });
            R.noalias() += A * E;
        }
        std::vector<double> out(C * G);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < G; ++i)
                out[c * G + i] = R(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
        return out;
    };
    std::vector<int> groups(C * G);
    for (std::size_t c = 0; c < C; ++c)
        std::fill(groups.begin() + static_cast<std::ptrdiff_t>(c * G),
                  groups.begin() + static_cast<std::ptrdiff_t>((c + 1) * G), static_cast<int>(c));
    const std::vector<double> v = refine_time_integrals(eval, T, rel_tol, 12, groups);

    const double WT = whole_domain_mass(p, frame.x0, omega, res, T);
    std::vector<PacketEnergyDensity> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t c = cls[i];
        const double AT = std::exp(-2.0 * T * s2 * xi2[c] / (s2 + T));
        out[i].n = indices[i];
        out[i].d_n = 1.0 / (AT * WT);
        out[i].rho = grid;
        for (std::size_t g = 0; g < G; ++g)
            out[i].rho[g] = out[i].d_n * v[c * G + g];
    }
    return out;
}

PacketEnergyDensity energy_density(const Frame& frame, const Lattice& n, double T, const BoxDomain& omega,
                                   const Resolution& res)
{
    return energy_densities(frame, {n}, T, omega, res).front();
}

double inner(const RealField& a, const RealField& rho)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * rho[i];
    return acc * a.cell_volume();
}

JValue J_of_a(const RealField& a, const std::vector<RealField>& rho)
{
    if (rho.empty())
        fail(ErrorKind::EmptySet, "no densities");
    JValue j;
    j.value = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < rho.size(); ++n) {
        const double v = inner(a, rho[n]);
        if (v < j.value) {
            j.value = v;
            j.argmin = n;
        }
    }
    return j;
}

RealField combine(const std::vector<double>& alpha, const std::vector<RealField>& rho)
{
    RealField phi = rho.front();
    std::fill(phi.values.begin(), phi.values.end(), 0.0);
    for (std::size_t n = 0; n < rho.size(); ++n) {
        if (alpha[n] == 0.0)
            continue;
        for (std::size_t i = 0; i < phi.size(); ++i)
            phi[i] += alpha[n] * rho[n][i];
    }
    return phi;
}

// ---------------------------------------------------------------------------
// Bathtub

namespace {

double budget_cells(double M, std::size_t G)
{
    if (!(M > 0.0))
        fail(ErrorKind::PreconditionViolation, "measure fraction must be positive", {M});
    if (M > 1.0 + 1e-12)
        fail(ErrorKind::InfeasibleMeasure, "measure budget exceeds |Omega|", {M});
    return std::min(1.0, M) * static_cast<double>(G);
}

std::vector<std::size_t> descending_order(const RealField& phi)
{
    std::vector<std::size_t> order(phi.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return phi[a] > phi[b]; });
    return order;
}

std::size_t layer_allowance(const RealField& f)
{
    std::size_t face = 1;
    for (int k = 0; k < f.dim(); ++k)
        face = std::max<std::size_t>(face, f.size() / static_cast<std::size_t>(f.res[k]));
    return 4 * face;
}

} // namespace

Bathtub bathtub_max(const RealField& phi, double M)
{
    const std::size_t G = phi.size();
    const double b = budget_cells(M, G);
    const auto order = descending_order(phi);
    std::size_t k = static_cast<std::size_t>(std::floor(b + 1e-12));
    double r = b - static_cast<double>(k);
    if (r < 1e-12)
        r = 0.0;
    k = std::min(k, G);
    Bathtub out;
    out.a = phi;
    std::fill(out.a.values.begin(), out.a.values.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i)
        out.a[order[i]] = 1.0;
    if (r > 0.0 && k < G) {
        out.a[order[k]] = r;
        out.marginal = order[k];
    } else {
        out.marginal = order[k == 0 ? 0 : k - 1];
    }
    out.lambda = phi[out.marginal];
    out.value = inner(out.a, phi);
    double scale = 0.0;
    for (double v : phi.values)
        scale = std::max(scale, std::abs(v));
    for (double v : phi.values)
        out.ties += std::abs(v - out.lambda) <= 1e-12 * scale;
    out.degenerate = out.ties > layer_allowance(phi);
    return out;
}

Bathtub bathtub_max(const std::vector<double>& alpha, const std::vector<RealField>& rho, double M)
{
    return bathtub_max(combine(alpha, rho), M);
}

// ---------------------------------------------------------------------------
// Saddle solver

namespace {

struct SaddleState {
    const std::vector<RealField>& rho;
    double M;
    double b;
    double vol;
    double upper = std::numeric_limits<double>::infinity();
    std::vector<double> alpha_upper;
    double lower = -std::numeric_limits<double>::infinity();
    RealField a_lower;

    // Upper certificate at alpha; returns the bathtub mask.
    Bathtub try_alpha(const std::vector<double>& alpha)
    {
        Bathtub bt = bathtub_max(alpha, rho, M);
        if (bt.value < upper) {
            upper = bt.value;
            alpha_upper = alpha;
        }
        try_mask(bt.a);
        return bt;
    }

    void try_mask(const RealField& a)
    {
        const double v = J_of_a(a, rho).value;
        if (v > lower) {
            lower = v;
            a_lower = a;
        }
    }
};

// Equalizer step on the top weights: for a support A of size m and m cells
// tied at the threshold, solve for the weights making the tied cells level and
// for the tied fractions making the constraints on A equal.
void polish(SaddleState& st, const std::vector<double>& seed)
{
    const std::size_t P = st.rho.size();
    std::vector<std::size_t> byweight(P);
    std::iota(byweight.begin(), byweight.end(), std::size_t{0});
    std::stable_sort(byweight.begin(), byweight.end(), [&](std::size_t a, std::size_t b) { return seed[a] > seed[b]; });
    const std::size_t G = st.rho.front().size();
    const std::size_t k = std::min(G, static_cast<std::size_t>(std::floor(st.b + 1e-12)));

    // pure strategies on the binding constraint of the best mask, and on the top weight
    for (std::size_t n : {J_of_a(st.a_lower, st.rho).argmin, byweight.front()}) {
        std::vector<double> e(P, 0.0);
        e[n] = 1.0;
        st.try_alpha(e);
    }

    for (std::size_t m = 1; m <= std::min<std::size_t>(4, P); ++m) {
        const std::vector<std::size_t> A(byweight.begin(), byweight.begin() + static_cast<std::ptrdiff_t>(m));
        std::vector<double> alpha(P, 0.0);
        double sum = 0.0;
        for (std::size_t n : A)
            sum += seed[n];
        for (std::size_t n : A)
            alpha[n] = sum > 0.0 ? seed[n] / sum : 1.0 / static_cast<double>(m);
        for (int rep = 0; rep < 4; ++rep) {
            const RealField phi = combine(alpha, st.rho);
            const auto order = descending_order(phi);
            std::vector<double> next;
            for (std::size_t j = 0; j < m; ++j) {
                if (k < j)
                    break;
                const std::size_t start = k - j;
                if (start + m > G)
                    continue;
                const std::vector<std::size_t> F(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(start + m));
                // Weights: sum_A alpha_n rho_n(f) - lambda = 0 on F, sum alpha = 1.
                Eigen::MatrixXd Ma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1),
                                                           static_cast<Eigen::Index>(m + 1));
                Eigen::VectorXd ra = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m + 1));
                for (std::size_t f = 0; f < m; ++f) {
                    for (std::size_t q = 0; q < m; ++q)
                        Ma(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(q)) = st.rho[A[q]][F[f]];
                    Ma(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(m)) = -1.0;
                }
                for (std::size_t q = 0; q < m; ++q)
                    Ma(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) = 1.0;
                ra(static_cast<Eigen::Index>(m)) = 1.0;
                Eigen::FullPivLU<Eigen::MatrixXd> lua(Ma);
                if (lua.isInvertible()) {
                    const Eigen::VectorXd sol = lua.solve(ra);
                    std::vector<double> cand(P, 0.0);
                    bool ok = true;
                    double s = 0.0;
                    for (std::size_t q = 0; q < m; ++q) {
                        const double v = sol(static_cast<Eigen::Index>(q));
                        ok = ok && v >= -1e-12;
                        cand[A[q]] = std::max(0.0, v);
                        s += cand[A[q]];
                    }
                    if (ok && s > 0.0) {
                        for (double& v : cand)
                            v /= s;
                        st.try_alpha(cand);
                        if (next.empty())
                            next = cand;
                    }
                }
                // Fractions: sum a_F = b - start; int a rho_n equal over A.
                const std::vector<std::size_t> ones(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(start));
                std::vector<double> base(m, 0.0);
                for (std::size_t q = 0; q < m; ++q)
                    for (std::size_t c : ones)
                        base[q] += st.rho[A[q]][c];
                Eigen::MatrixXd Mf = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
                Eigen::VectorXd rf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
                for (std::size_t f = 0; f < m; ++f)
                    Mf(0, static_cast<Eigen::Index>(f)) = 1.0;
                rf(0) = st.b - static_cast<double>(start);
                for (std::size_t q = 1; q < m; ++q) {
                    for (std::size_t f = 0; f < m; ++f)
                        Mf(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(f)) =
                            st.rho[A[q]][F[f]] - st.rho[A[0]][F[f]];
                    rf(static_cast<Eigen::Index>(q)) = base[0] - base[q];
                }
                Eigen::FullPivLU<Eigen::MatrixXd> luf(Mf);
                if (!luf.isInvertible())
                    continue;
                const Eigen::VectorXd frac = luf.solve(rf);
                bool ok = true;
                for (std::size_t f = 0; f < m; ++f) {
                    const double v = frac(static_cast<Eigen::Index>(f));
                    ok = ok && v >= -1e-12 && v <= 1.0 + 1e-12;
                }
                if (!ok)
                    continue;
                RealField a = st.rho.front();
                std::fill(a.values.begin(), a.values.end(), 0.0);
                for (std::size_t c : ones)
                    a[c] = 1.0;
                for (std::size_t f = 0; f < m; ++f)
                    a[F[f]] = std::clamp(frac(static_cast<Eigen::Index>(f)), 0.0, 1.0);
                st.try_mask(a);
            }
            if (next.empty())
                break;
            alpha = next;
        }
    }
}

std::size_t count_fractional(const RealField& a)
{
    std::size_t n = 0;
    for (double v : a.values)
        n += v > 1e-12 && v < 1.0 - 1e-12;
    return n;
}

} // namespace

DesignSolution saddle_solve_densities(const std::vector<RealField>& rho, double M, const SaddleOptions& opt)
{
    if (rho.empty())
        fail(ErrorKind::EmptySet, "no densities");
    const std::size_t P = rho.size();
    const std::size_t G = rho.front().size();
    SaddleState st{rho, M, budget_cells(M, G), rho.front().cell_volume(), std::numeric_limits<double>::infinity(), {},
                   -std::numeric_limits<double>::infinity(), RealField{}};
    std::vector<double> alpha(P, 1.0 / static_cast<double>(P));
    std::vector<double> avg(P, 0.0);

    DesignSolution sol;
    int it = 0;
    auto converged = [&] { return st.upper - st.lower <= opt.tol; };
    for (it = 1; it <= opt.iters; ++it) {
        const Bathtub bt = st.try_alpha(alpha);
        for (std::size_t n = 0; n < P; ++n)
            avg[n] += (alpha[n] - avg[n]) / it;
        if (it % 10 == 0)
            st.try_alpha(avg);
        if (opt.polish && (it & (it - 1)) == 0) {
            polish(st, alpha);
            polish(st, avg);
        }
        if (converged())
            break;
        std::vector<double> g(P);
        for (std::size_t n = 0; n < P; ++n)
            g[n] = inner(bt.a, rho[n]);
        const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
        const double range = *gmax - *gmin;
        if (!(range > 0.0))
            continue;
        const double step = opt.step_c / std::sqrt(static_cast<double>(it));
        double s = 0.0;
        for (std::size_t n = 0; n < P; ++n) {
            alpha[n] *= std::exp(-step * (g[n] - *gmin) / range);
            s += alpha[n];
        }
        for (double& v : alpha)
            v /= s;
    }
    sol.iterations = std::min(it, opt.iters);
    sol.a = st.a_lower;
    sol.alpha = st.alpha_upper;
    sol.value = st.lower;
    sol.upper = st.upper;
    sol.gap = std::max(0.0, st.upper - st.lower);
    sol.converged = converged();
    const Bathtub at = bathtub_max(st.alpha_upper, rho, M);
    sol.lambda = at.lambda;
    sol.degenerate = at.degenerate;
    sol.fractional_cells = count_fractional(sol.a);
    if (!sol.converged)
        throw SaddleNoConvergence("saddle gap " + format_double(sol.gap) + " above tolerance after " +
                                      std::to_string(opt.iters) + " iterations",
                                  sol);
    return sol;
}

std::vector<Lattice> indices_up_to(const FrameParams& params, int N)
{
    std::vector<Lattice> out;
    for (const auto& n : params.S)
        if (lattice_norm2(n, params.dim) <= static_cast<long>(N) * N)
            out.push_back(n);
    if (out.empty())
        fail(ErrorKind::EmptySet, "S_N is empty for N = " + std::to_string(N));
    return out;
}

DesignSolution saddle_solve(const Frame& frame, double M, double T, int N, const BoxDomain& omega,
                            const Resolution& res, const SaddleOptions& opt)
{
    const std::vector<Lattice> idx = indices_up_to(frame.params, N);
    // Densities depend on n only through |n|: solve on one representative per
    // class and split each class weight evenly.
    std::vector<Lattice> reps;
    std::vector<std::size_t> cls(idx.size());
    std::map<long, std::size_t> class_of;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const long key = lattice_norm2(idx[i], frame.params.dim);
        auto it = class_of.find(key);
        if (it == class_of.end()) {
            it = class_of.emplace(key, reps.size()).first;
            reps.push_back(idx[i]);
        }
        cls[i] = it->second;
    }
    const auto dens = energy_densities(frame, reps, T, omega, res);
    std::vector<RealField> rho;
    for (const auto& d : dens)
        rho.push_back(d.rho);
    std::vector<std::size_t> members(reps.size(), 0);
    for (std::size_t c : cls)
        ++members[c];
    auto expand = [&](DesignSolution s) {
        std::vector<double> alpha(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            alpha[i] = s.alpha[cls[i]] / static_cast<double>(members[cls[i]]);
        s.alpha = std::move(alpha);
        s.indices = idx;
        s.N = N;
        return s;
    };
    try {
        return expand(saddle_solve_densities(rho, M, opt));
    } catch (const SaddleNoConvergence& e) {
        throw SaddleNoConvergence(e.what(), expand(e.best()));
    }
}

// ---------------------------------------------------------------------------
// H1 level sets

LevelSetReport h1_levelset_check(const std::vector<double>& alpha, const std::vector<RealField>& rho)
{
    double wsum = 0.0;
    for (double v : alpha)
        wsum += std::abs(v);
    if (!(wsum > 0.0))
        fail(ErrorKind::PreconditionViolation, "weights are all zero");
    const RealField phi = combine(alpha, rho);
    const int d = phi.dim();
    const std::size_t G = phi.size();
    double h = 0.0, scale = 0.0;
    for (int k = 0; k < d; ++k)
        h = std::max(h, phi.h(k));
    for (double v : phi.values)
        scale = std::max(scale, std::abs(v));

    // ||grad phi||_inf by one-sided/central differences.
    double grad = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
        const auto idx = phi.unflatten(i);
        double g2 = 0.0;
        for (int k = 0; k < d; ++k) {
            auto lo = idx, hi = idx;
            lo[k] = std::max(0, idx[k] - 1);
            hi[k] = std::min(phi.res[k] - 1, idx[k] + 1);
            if (hi[k] == lo[k])
                continue;
            const double der = (phi[phi.flatten(hi)] - phi[phi.flatten(lo)]) / ((hi[k] - lo[k]) * phi.h(k));
            g2 += der * der;
        }
        grad = std::max(grad, std::sqrt(g2));
    }

    LevelSetReport rep;
    rep.tolerance = h * grad + 1e-12 * scale;
    std::vector<double> vals = phi.values;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<double> levels;
    if (vals.size() == 1) {
        levels.push_back(vals.front());
    } else {
        const std::size_t count = std::min<std::size_t>(256, vals.size() - 1);
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t q = j * (vals.size() - 1) / count;
            levels.push_back(0.5 * (vals[q] + vals[q + 1]));
        }
    }
    rep.levels = levels.size();
    rep.min_flagged = std::numeric_limits<double>::infinity();
    const double vol = phi.cell_volume();
    for (double c : levels) {
        std::size_t flagged = 0, crossings = 0;
        for (std::size_t i = 0; i < G; ++i) {
            flagged += std::abs(phi[i] - c) < rep.tolerance;
            const auto idx = phi.unflatten(i);
            for (int k = 0; k < d; ++k) {
                if (idx[k] + 1 >= phi.res[k])
                    continue;
                auto nb = idx;
                ++nb[k];
                crossings += (phi[i] - c) * (phi[phi.flatten(nb)] - c) < 0.0;
            }
        }
        const double m = flagged * vol;
        rep.max_flagged = std::max(rep.max_flagged, m);
        if (m < rep.min_flagged) {
            rep.min_flagged = m;
            rep.min_level = c;
            rep.allowance = 2.0 * static_cast<double>(crossings) * vol;
        }
    }
    rep.pass = rep.allowance > 0.0 && rep.min_flagged <= rep.allowance * (1.0 + 1e-12);
    rep.degenerate = !rep.pass;
    return rep;
}

// ---------------------------------------------------------------------------
// H2 quotients

GammaReport h2_gamma_check(const Frame& frame, const ObservationSet& omega, double T, double rel_tol)
{
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "horizon must be positive");
    if (omega.full_space)
        fail(ErrorKind::PreconditionViolation, "quotient check needs a bounded observation set");
    const FrameParams& p = frame.params;
    const int d = p.dim;
    const double s2 = p.sigma * p.sigma;
    GammaReport rep;
    rep.first = p.S.front();
    rep.first_xi = std::sqrt(norm2(p.xi(rep.first), d));
    long top2 = 0;
    for (const auto& n : p.S)
        top2 = std::max(top2, lattice_norm2(n, d));
    std::vector<Lattice> top;
    for (const auto& n : p.S)
        if (lattice_norm2(n, d) == top2)
            top.push_back(n);
    rep.top = top.front();
    rep.top_xi = std::sqrt(norm2(p.xi(rep.top), d));

    const SpaceRule rule = space_rule(omega.mask, 4);
    auto W = [&](double t) { return gauss_mass(rule, frame.x0, p.sigma, d, t); };
    // Both quotients as int W(t) A(t,n)/A(T,n) dt / W_Omega(T); A(t)/A(T) in log form.
    const double x1 = rep.first_xi * rep.first_xi, xt = rep.top_xi * rep.top_xi;
    auto logA = [&](double t, double xi2) { return -2.0 * t * s2 * xi2 / (s2 + t); };
    auto eval = [&](const TimeMesh& mesh) {
        std::vector<double> w(mesh.t.size());
        parallel_for(mesh.t.size(), [&](std::size_t i) { w[i] = W(mesh.t[i]); });
        double g1 = 0.0, gt = 0.0;
        for (std::size_t i = 0; i < mesh.t.size(); ++i) {
            g1 += mesh.w[i] * w[i] * std::exp(logA(mesh.t[i], x1) - logA(T, x1));
            gt += mesh.w[i] * w[i] * std::exp(logA(mesh.t[i], xt) - logA(T, xt));
        }
        return std::vector<double>{g1, gt};
    };
    const std::vector<double> v = refine_time_integrals(eval, T, rel_tol);
    const double WT = whole_domain_mass(p, frame.x0, omega.domain, omega.mask.res, T);
    rep.gamma1 = v[0] / WT;
    rep.quotient_top = v[1] / WT;
    rep.ratio = rep.quotient_top / rep.gamma1;

    const double kappa = gramian_constant(d);
    const double CB = std::exp(-1.0) * std::erf(1.0);
    const double mOmega = ball_fraction(whole_domain(omega.domain, omega.mask.res), frame.x0, T, p.sigma);
    const double wmeas = omega.measure();
    const double RT = 2.0 * std::sqrt(s2 + T);
    const double BT = d == 1 ? 2.0 * RT : M_PI * RT * RT;
    const double f1 = x1 > 0.0 ? std::expm1(2.0 * x1 * T) / (2.0 * x1) : T;
    rep.u1 = kappa / (mOmega * CB) * wmeas * f1;
    const double f2 = xt > 0.0 ? (std::exp(2.0 * xt * T) - std::exp(1.5 * xt * T)) / (1.5 * xt) : 0.5 * T;
    rep.u2 = kappa * CB / mOmega * (wmeas / BT) * f2;
    rep.pass = rep.quotient_top > rep.gamma1;
    if (!rep.pass)
        fail(ErrorKind::AssertionFailure,
             "top-frequency quotient " + format_double(rep.quotient_top) + " does not exceed gamma1 " +
                 format_double(rep.gamma1),
             {rep.gamma1, rep.quotient_top, rep.u1, rep.u2});
    return rep;
}

// ---------------------------------------------------------------------------
// Stabilization

double symmetric_difference(const RealField& a, const RealField& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(a[i] - b[i]);
    return acc * a.cell_volume();
}

double hausdorff_full_cells(const RealField& a, const RealField& b)
{
    std::vector<Point> A, B;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] >= 1.0)
            A.push_back(a.center(i));
        if (b[i] >= 1.0)
            B.push_back(b.center(i));
    }
    if (A.empty() && B.empty())
        return 0.0;
    if (A.empty() || B.empty())
        return std::numeric_limits<double>::infinity();
    const int d = a.dim();
    auto directed = [&](const std::vector<Point>& X, const std::vector<Point>& Y) {
        double worst = 0.0;
        for (const auto& x : X) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& y : Y) {
                double r2 = 0.0;
                for (int k = 0; k < d; ++k)
                    r2 += (x[k] - y[k]) * (x[k] - y[k]);
                best = std::min(best, r2);
            }
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(A, B), directed(B, A));
}

bool agree_on_nonfractional(const RealField& a, const RealField& b)
{
    auto frac = [](double v) { return v > 1e-12 && v < 1.0 - 1e-12; };
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (frac(a[i]) || frac(b[i]))
            continue;
        if (std::round(a[i]) != std::round(b[i]))
            return false;
    }
    return true;
}

StabilityReport stability_study(const Frame& frame, double M, double T, const std::vector<int>& N_list,
                                const BoxDomain& omega, const Resolution& res, const SaddleOptions& opt)
{
    if (N_list.empty())
        fail(ErrorKind::EmptySet, "empty N list");
    for (std::size_t i = 1; i < N_list.size(); ++i)
        if (N_list[i] <= N_list[i - 1])
            fail(ErrorKind::PreconditionViolation, "N list must be increasing");
    StabilityReport rep;
    rep.N = N_list;
    for (int N : N_list)
        rep.solutions.push_back(saddle_solve(frame, M, T, N, omega, res, opt));
    for (std::size_t i = 1; i < rep.solutions.size(); ++i) {
        const RealField& a = rep.solutions[i - 1].a;
        const RealField& b = rep.solutions[i].a;
        rep.symdiff.push_back(symmetric_difference(a, b));
        rep.hausdorff.push_back(hausdorff_full_cells(a, b));
        rep.agree.push_back(agree_on_nonfractional(a, b));
    }
    rep.stabilized = rep.agree.empty() || rep.agree.back();
    for (std::size_t i = 1; i < rep.symdiff.size(); ++i)
        rep.symdiff_tail_nonincreasing = rep.symdiff_tail_nonincreasing && rep.symdiff[i] <= rep.symdiff[i - 1];
    return rep;
}

} // namespace heatpack
