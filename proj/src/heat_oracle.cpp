#include "heatpack/heat_oracle.hpp"

#include "heatpack/error.hpp"
#include "heatpack/parallel.hpp"
#include "heatpack/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace heatpack {

double free_kernel(int dim, double t, const Point& x, const Point& y)
{
    if (!(t > 0.0))
        fail(ErrorKind::NonpositiveTime, "heat kernel needs t > 0");
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k)
        r2 += (x[k] - y[k]) * (x[k] - y[k]);
    return std::pow(4.0 * M_PI * t, -0.5 * dim) * std::exp(-r2 / (4.0 * t));
}

double kac_bound(double t, const Point& y, const BoxDomain& omega)
{
    if (!(t > 0.0))
        fail(ErrorKind::NonpositiveTime, "Kac bound needs t > 0");
    if (!omega.contains(y))
        fail(ErrorKind::PointOutsideDomain, "Kac bound needs y in Omega");
    const int d = omega.dim;
    const double dist = omega.distance_to_boundary(y);
    const double t0 = dist * dist / (2.0 * d);
    if (t <= t0)
        return std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(-dist * dist / (4.0 * t));
    return std::pow(4.0 * M_PI * t0, -0.5 * d) * std::exp(-0.5 * d);
}

RealField free_evolve(const RealField& g, double t)
{
    if (!(t > 0.0))
        fail(ErrorKind::NonpositiveTime, "free evolution needs t > 0");
    const int d = g.dim();
    auto axis_matrix = [&](int k) {
        const int n = g.res[k];
        const double h = g.h(k);
        std::vector<double> K(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double r = (i - j) * h;
                K[static_cast<std::size_t>(i) * n + j] =
                    h * std::exp(-r * r / (4.0 * t)) / std::sqrt(4.0 * M_PI * t);
            }
        return K;
    };
    RealField out = g;
    if (d == 1) {
        const int n = g.res[0];
        const auto K = axis_matrix(0);
        parallel_for(n, [&](std::size_t i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += K[i * n + j] * g[j];
            out[i] = s;
        });
        return out;
    }
    const int n0 = g.res[0], n1 = g.res[1];
    const auto K0 = axis_matrix(0), K1 = axis_matrix(1);
    RealField tmp = g;
    parallel_for(n0, [&](std::size_t i) {
        for (int j = 0; j < n1; ++j) {
            double s = 0.0;
            for (int l = 0; l < n1; ++l)
                s += K1[static_cast<std::size_t>(j) * n1 + l] * g[i * n1 + l];
            tmp[i * n1 + j] = s;
        }
    });
    parallel_for(n1, [&](std::size_t j) {
        for (int i = 0; i < n0; ++i) {
            double s = 0.0;
            for (int l = 0; l < n0; ++l)
                s += K0[static_cast<std::size_t>(i) * n0 + l] * tmp[static_cast<std::size_t>(l) * n1 + j];
            out[static_cast<std::size_t>(i) * n1 + j] = s;
        }
    });
    return out;
}

RealField free_evolve_bump(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res, double t)
{
    if (!(t > 0.0))
        fail(ErrorKind::NonpositiveTime, "free evolution needs t > 0");
    const int d = bump.dim;
    const double w = std::sqrt(4.0 * t);
    const double e0 = bump.epsilon0;
    const int order = d == 1 ? 10 : 6;
    const double panel = std::min(d == 1 ? e0 / 16.0 : e0 / 8.0, 0.5 * w);
    RealField out(omega, res);
    parallel_for(out.size(), [&](std::size_t i) {
        const Point x = out.center(i);
        std::array<Nodes1d, kMaxDim> ax;
        for (int k = 0; k < d; ++k) {
            const double a = std::max(bump.center[k] - e0, x[k] - 7.0 * w);
            const double b = std::min(bump.center[k] + e0, x[k] + 7.0 * w);
            if (!(b > a))
                return;
            const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
            ax[k] = composite_gauss(a, b, panels, order);
        }
        double acc = 0.0;
        if (d == 1) {
            for (std::size_t q = 0; q < ax[0].x.size(); ++q) {
                const double r = x[0] - ax[0].x[q];
                acc += ax[0].w[q] * std::exp(-r * r / (4.0 * t)) * bump(Point{ax[0].x[q], 0.0});
            }
        } else {
            for (std::size_t q = 0; q < ax[0].x.size(); ++q) {
                const double r0 = x[0] - ax[0].x[q];
                const double k0 = ax[0].w[q] * std::exp(-r0 * r0 / (4.0 * t));
                for (std::size_t p = 0; p < ax[1].x.size(); ++p) {
                    const double r1 = x[1] - ax[1].x[p];
                    acc += k0 * ax[1].w[p] * std::exp(-r1 * r1 / (4.0 * t)) *
                           bump(Point{ax[0].x[q], ax[1].x[p]});
                }
            }
        }
        out[i] = acc * std::pow(4.0 * M_PI * t, -0.5 * d);
    });
    return out;
}

RealField sample(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res)
{
    RealField f(omega, res);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = bump(f.center(i));
    return f;
}

// ---------------------------------------------------------------------------
// Crank–Nicolson

namespace {

struct Stencil {
    int dim = 1;
    Resolution res{1, 1};
    std::array<double, kMaxDim> ih2{};
    double vol = 0.0;
    std::size_t n = 0;
};

Stencil make_stencil(const RealField& g)
{
    Stencil s;
    s.dim = g.dim();
    s.res = g.res;
    for (int k = 0; k < s.dim; ++k)
        s.ih2[k] = 1.0 / (g.h(k) * g.h(k));
    s.vol = g.cell_volume();
    s.n = g.size();
    return s;
}

// Discrete Laplacian with antisymmetric ghost cells (u_ghost = -u).
void laplacian(const Stencil& s, const std::vector<double>& u, std::vector<double>& out)
{
    if (s.dim == 1) {
        const int n = s.res[0];
        for (int i = 0; i < n; ++i) {
            const double l = i > 0 ? u[i - 1] : -u[i];
            const double r = i + 1 < n ? u[i + 1] : -u[i];
            out[i] = (l - 2.0 * u[i] + r) * s.ih2[0];
        }
        return;
    }
    const int n0 = s.res[0], n1 = s.res[1];
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * n1 + j;
            const double v = u[c];
            const double xl = i > 0 ? u[c - n1] : -v;
            const double xr = i + 1 < n0 ? u[c + n1] : -v;
            const double yl = j > 0 ? u[c - 1] : -v;
            const double yr = j + 1 < n1 ? u[c + 1] : -v;
            out[c] = (xl - 2.0 * v + xr) * s.ih2[0] + (yl - 2.0 * v + yr) * s.ih2[1];
        }
}

double grad_norm2(const Stencil& s, const std::vector<double>& u)
{
    double acc = 0.0;
    if (s.dim == 1) {
        const int n = s.res[0];
        for (int i = 0; i + 1 < n; ++i)
            acc += (u[i + 1] - u[i]) * (u[i + 1] - u[i]);
        acc += 2.0 * (u[0] * u[0] + u[n - 1] * u[n - 1]);
        return acc * s.ih2[0] * s.vol;
    }
    const int n0 = s.res[0], n1 = s.res[1];
    double ax = 0.0, ay = 0.0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * n1 + j;
            if (i + 1 < n0)
                ax += (u[c + n1] - u[c]) * (u[c + n1] - u[c]);
            if (j + 1 < n1)
                ay += (u[c + 1] - u[c]) * (u[c + 1] - u[c]);
            if (i == 0 || i == n0 - 1)
                ax += 2.0 * u[c] * u[c] * (n0 == 1 ? 2.0 : 1.0);
            if (j == 0 || j == n1 - 1)
                ay += 2.0 * u[c] * u[c] * (n1 == 1 ? 2.0 : 1.0);
        }
    (void)acc;
    return (ax * s.ih2[0] + ay * s.ih2[1]) * s.vol;
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

struct RealRun {
    std::vector<std::vector<double>> snaps;
    std::vector<double> norm2, grad2, grad2_mid, observed2;
};

RealRun run_real(const Stencil& s, const std::vector<double>& g, double dt, int steps,
                 const std::vector<int>& snap_steps, const RealField* mask)
{
    RealRun run;
    std::vector<double> u = g, next(s.n), lap(s.n), rhs(s.n);
    const double half = 0.5 * dt;
    auto record = [&](const std::vector<double>& v) {
        double n2 = 0.0;
        for (double x : v)
            n2 += x * x;
        run.norm2.push_back(n2 * s.vol);
        run.grad2.push_back(grad_norm2(s, v));
        if (mask) {
            double o = 0.0;
            for (std::size_t i = 0; i < s.n; ++i)
                o += (*mask)[i] * v[i] * v[i];
            run.observed2.push_back(o * s.vol);
        }
    };
    std::size_t next_snap = 0;
    auto snapshot = [&](int k) {
        while (next_snap < snap_steps.size() && snap_steps[next_snap] == k) {
            run.snaps.push_back(u);
            ++next_snap;
        }
    };
    record(u);
    snapshot(0);

    // 1-D: Thomas factorization of I - (dt/2) Lap.
    std::vector<double> cdiag, dinv;
    const double off = s.dim == 1 ? -half * s.ih2[0] : 0.0;
    if (s.dim == 1) {
        const int n = s.res[0];
        std::vector<double> diag(n, 1.0 + 2.0 * half * s.ih2[0]);
        diag[0] += half * s.ih2[0];
        diag[n - 1] += half * s.ih2[0];
        if (n == 1)
            diag[0] = 1.0 + 4.0 * half * s.ih2[0];
        cdiag.assign(n, 0.0);
        dinv.assign(n, 0.0);
        double denom = diag[0];
        dinv[0] = 1.0 / denom;
        for (int i = 1; i < n; ++i) {
            cdiag[i - 1] = off * dinv[i - 1];
            denom = diag[i] - off * cdiag[i - 1];
            dinv[i] = 1.0 / denom;
        }
    }
    std::vector<double> r(s.n), p(s.n), Ap(s.n), mid(s.n);
    for (int k = 1; k <= steps; ++k) {
        laplacian(s, u, lap);
        for (std::size_t i = 0; i < s.n; ++i)
            rhs[i] = u[i] + half * lap[i];
        if (s.dim == 1) {
            const int n = s.res[0];
            next[0] = rhs[0] * dinv[0];
            for (int i = 1; i < n; ++i)
                next[i] = (rhs[i] - off * next[i - 1]) * dinv[i];
            for (int i = n - 2; i >= 0; --i)
                next[i] -= cdiag[i] * next[i + 1];
        } else {
            next = u;
            laplacian(s, next, lap);
            for (std::size_t i = 0; i < s.n; ++i)
                r[i] = rhs[i] - (next[i] - half * lap[i]);
            p = r;
            double rr = dot(r, r);
            const double stop = 1e-30 * std::max(dot(rhs, rhs), 1e-300);
            for (int it = 0; it < 2000 && rr > stop; ++it) {
                laplacian(s, p, lap);
                for (std::size_t i = 0; i < s.n; ++i)
                    Ap[i] = p[i] - half * lap[i];
                const double alpha = rr / dot(p, Ap);
                for (std::size_t i = 0; i < s.n; ++i) {
                    next[i] += alpha * p[i];
                    r[i] -= alpha * Ap[i];
                }
                const double rr_new = dot(r, r);
                const double beta = rr_new / rr;
                rr = rr_new;
                for (std::size_t i = 0; i < s.n; ++i)
                    p[i] = r[i] + beta * p[i];
            }
        }
        for (std::size_t i = 0; i < s.n; ++i)
            mid[i] = 0.5 * (u[i] + next[i]);
        run.grad2_mid.push_back(grad_norm2(s, mid));
        std::swap(u, next);
        record(u);
        snapshot(k);
    }
    return run;
}

struct Schedule {
    double dt = 0.0;
    int steps = 0;
    std::vector<int> snap_steps;
    std::vector<double> snap_times;
};

Schedule schedule(const RealField& g, double T, const std::vector<double>& times)
{
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "fd_solve needs T > 0");
    double hmin = g.h(0);
    for (int k = 1; k < g.dim(); ++k)
        hmin = std::min(hmin, g.h(k));
    const double dt_max = 0.5 * hmin * hmin;
    int steps = static_cast<int>(std::ceil(T / dt_max - 1e-9));
    steps = std::max(steps, 64);
    steps = 64 * ((steps + 63) / 64);
    Schedule sc;
    sc.steps = steps;
    sc.dt = T / steps;
    std::vector<double> ts = times;
    std::sort(ts.begin(), ts.end());
    for (double t : ts) {
        if (t < 0.0 || t > T * (1.0 + 1e-12))
            fail(ErrorKind::PreconditionViolation, "snapshot time outside [0, T]");
        const int k = std::clamp(static_cast<int>(std::lround(t / sc.dt)), 0, steps);
        sc.snap_steps.push_back(k);
        sc.snap_times.push_back(k * sc.dt);
    }
    return sc;
}

void check_boundary(const RealField& re, const RealField* im, double tol)
{
    double peak = 0.0, edge = 0.0;
    for (std::size_t i = 0; i < re.size(); ++i) {
        const double v = im ? std::hypot(re[i], (*im)[i]) : std::abs(re[i]);
        peak = std::max(peak, v);
        if (re.is_boundary_cell(i))
            edge = std::max(edge, v);
    }
    if (edge > tol * peak)
        fail(ErrorKind::BoundaryViolation,
             "initial data has boundary mass " + format_double(edge / std::max(peak, 1e-300)) + " of its max",
             {edge, peak});
}

FdSolution finish(const RealField& shape, const Schedule& sc, double T, const RealRun& re, const RealRun* im)
{
    FdSolution sol;
    sol.dt = sc.dt;
    sol.steps = sc.steps;
    sol.T = T;
    sol.snapshot_times = sc.snap_times;
    for (std::size_t j = 0; j < re.snaps.size(); ++j) {
        ComplexField f(shape.domain, shape.res);
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = cplx(re.snaps[j][i], im ? im->snaps[j][i] : 0.0);
        sol.snapshots.push_back(std::move(f));
    }
    auto add = [&](const std::vector<double>& a, const std::vector<double>* b) {
        std::vector<double> out = a;
        if (b)
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += (*b)[i];
        return out;
    };
    sol.norm2 = add(re.norm2, im ? &im->norm2 : nullptr);
    sol.grad2 = add(re.grad2, im ? &im->grad2 : nullptr);
    sol.grad2_mid = add(re.grad2_mid, im ? &im->grad2_mid : nullptr);
    sol.observed2 = add(re.observed2, im ? &im->observed2 : nullptr);
    return sol;
}

void check_mask(const RealField& g, const RealField* mask)
{
    if (mask && (mask->size() != g.size() || mask->res != g.res))
        fail(ErrorKind::PreconditionViolation, "observation mask does not match the grid");
}

} // namespace

FdSolution fd_solve(const RealField& g, double T, const FdOptions& opt)
{
    check_mask(g, opt.mask);
    check_boundary(g, nullptr, opt.boundary_tol);
    const Schedule sc = schedule(g, T, opt.snapshot_times);
    const Stencil st = make_stencil(g);
    const RealRun re = run_real(st, g.values, sc.dt, sc.steps, sc.snap_steps, opt.mask);
    return finish(g, sc, T, re, nullptr);
}

FdSolution fd_solve(const ComplexField& g, double T, const FdOptions& opt)
{
    RealField re(g.domain, g.res), im(g.domain, g.res);
    for (std::size_t i = 0; i < g.size(); ++i) {
        re[i] = g[i].real();
        im[i] = g[i].imag();
    }
    check_mask(re, opt.mask);
    check_boundary(re, &im, opt.boundary_tol);
    const Schedule sc = schedule(re, T, opt.snapshot_times);
    const Stencil st = make_stencil(re);
    const RealRun rr = run_real(st, re.values, sc.dt, sc.steps, sc.snap_steps, opt.mask);
    const RealRun ri = run_real(st, im.values, sc.dt, sc.steps, sc.snap_steps, opt.mask);
    return finish(re, sc, T, rr, &ri);
}

double observed_integral(const FdSolution& sol)
{
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < sol.observed2.size(); ++k)
        s += 0.5 * sol.dt * (sol.observed2[k] + sol.observed2[k + 1]);
    return s;
}

EnergyReport energy_check(const FdSolution& sol, double tol)
{
    EnergyReport rep;
    rep.tol = tol;
    rep.initial = 0.5 * sol.norm2.front();
    double dissipated = 0.0, naive = 0.0, worst = 0.0, worst_naive = 0.0;
    for (std::size_t k = 0; k + 1 < sol.norm2.size(); ++k) {
        dissipated += sol.dt * sol.grad2_mid[k];
        naive += 0.5 * sol.dt * (sol.grad2[k] + sol.grad2[k + 1]);
        const double lhs = 0.5 * sol.norm2[k + 1];
        worst = std::max(worst, std::abs(lhs + dissipated - rep.initial));
        worst_naive = std::max(worst_naive, std::abs(lhs + naive - rep.initial));
        if (sol.norm2[k + 1] > sol.norm2[k])
            rep.monotone = false;
        if (!(sol.norm2[k + 1] < sol.norm2[k]))
            rep.strictly_decreasing = false;
    }
    if (rep.initial > 0.0) {
        rep.residual = worst / rep.initial;
        rep.naive_residual = worst_naive / rep.initial;
    } else {
        rep.strictly_decreasing = false; // g = 0: nothing to decay
    }
    rep.pass = rep.residual <= tol && rep.monotone;
    return rep;
}

double measure_m0(const BumpSpec& bump, const RealField& mask, double T, int snapshots)
{
    const RealField g = sample(bump, mask.domain, mask.res);
    std::vector<double> times;
    for (int j = 0; j <= snapshots; ++j)
        times.push_back(T * j / snapshots);
    const FdSolution sol = fd_solve(g, T, {times, nullptr});
    double m0 = 0.0;
    for (const auto& snap : sol.snapshots)
        for (std::size_t i = 0; i < snap.size(); ++i)
            if (mask[i] > 0.0)
                m0 = std::max(m0, std::abs(snap[i]));
    return m0;
}

WholeVsDomainReport whole_vs_domain_check(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res,
                                          double T, double eta0, int snapshots)
{
    const double d2 = bump.delta * bump.delta;
    if (!(bump.epsilon0 < d2 && d2 < 1.0))
        fail(ErrorKind::PreconditionViolation, "need epsilon0 < delta^2 < 1");
    if (!(T > 0.0))
        fail(ErrorKind::PreconditionViolation, "need T > 0");
    if (!(T < eta0 * d2 * d2))
        fail(ErrorKind::PreconditionViolation,
             "need T < eta0 delta^4 = " + format_double(eta0 * d2 * d2) + " (T = " + format_double(T) + ")");
    WholeVsDomainReport rep;
    rep.T = T;
    rep.eta0 = eta0;
    rep.bound = 0.5 * eta0 * bump_norms(bump.dim).c0;
    const RealField g = sample(bump, omega, res);
    std::vector<double> times;
    for (int j = 1; j <= snapshots; ++j)
        times.push_back(T * j / snapshots);
    const FdSolution sol = fd_solve(g, T, {times, nullptr});
    rep.times = sol.snapshot_times;
    for (std::size_t j = 0; j < sol.snapshots.size(); ++j) {
        const RealField fr = free_evolve_bump(bump, omega, res, sol.snapshot_times[j]);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!g.is_boundary_cell(i))
                rep.measured = std::max(rep.measured, std::abs(fr[i] - sol.snapshots[j][i].real()));
    }
    rep.pass = rep.measured <= rep.bound;
    return rep;
}

KacReport kac_check(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res, double T, double tol,
                    const std::vector<double>& fractions)
{
    KacReport rep;
    rep.T = T;
    rep.tol = tol;
    const RealField g = sample(bump, omega, res);
    std::vector<double> times;
    for (double f : fractions)
        times.push_back(f * T);
    const FdSolution sol = fd_solve(g, T, {times, nullptr});
    rep.times = sol.snapshot_times;
    rep.worst_low = INFINITY;
    rep.worst_excess = -INFINITY;
    for (std::size_t j = 0; j < sol.snapshots.size(); ++j) {
        const double t = sol.snapshot_times[j];
        double kb = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g[i] != 0.0)
                kb += kac_bound(t, g.center(i), omega) * g[i];
        kb *= g.cell_volume();
        const RealField fr = free_evolve(g, t);
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double diff = fr[i] - sol.snapshots[j][i].real();
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        rep.bound.push_back(kb);
        rep.min_diff.push_back(lo);
        rep.max_diff.push_back(hi);
        rep.worst_low = std::min(rep.worst_low, lo);
        rep.worst_excess = std::max(rep.worst_excess, hi - kb);
    }
    rep.pass = rep.worst_low >= -tol && rep.worst_excess <= tol;
    return rep;
}

double short_time_limit(const BumpSpec& bump, double eta0, double c_sd)
{
    const BumpNorms& n = bump_norms(bump.dim);
    return eta0 * std::pow(bump.epsilon0, 2 + n.s) / (c_sd * n.c2s);
}

ShortTimeReport short_time_check(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res, double eta0,
                                 double t, double c_sd)
{
    ShortTimeReport rep;
    rep.t = t;
    rep.eta0 = eta0;
    rep.limit = short_time_limit(bump, eta0, c_sd);
    if (t < 0.0 || !(t < rep.limit))
        fail(ErrorKind::PreconditionViolation,
             "need 0 <= t < " + format_double(rep.limit) + " (t = " + format_double(t) + ")");
    if (t == 0.0) {
        rep.pass = true;
        return rep;
    }
    const RealField g = sample(bump, omega, res);
    const FdSolution sol = fd_solve(g, t, {{0.25 * t, 0.5 * t, 0.75 * t, t}, nullptr});
    rep.times = sol.snapshot_times;
    for (const auto& snap : sol.snapshots) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            s = std::max(s, std::abs(snap[i].real() - g[i]));
        if (!rep.sups.empty() && s < rep.sups.back())
            rep.monotone = false;
        rep.sups.push_back(s);
    }
    rep.measured = rep.sups.back();
    rep.pass = rep.measured <= eta0;
    return rep;
}

} // namespace heatpack
