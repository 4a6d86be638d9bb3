#include "command_util.hpp"

#include "heatpack/error.hpp"
#include "heatpack/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace heatpack {

using namespace detail;

namespace {

struct SuiteResult {
    bool pass = false;
    bool skipped = false;
    json metrics = json::object();
};

struct Validation {
    RunContext ctx;
    std::optional<DesignSolution> design;

    explicit Validation(const ExperimentConfig& cfg) : ctx(cfg) {}

    const DesignSolution& solution()
    {
        if (!design) {
            const ExperimentConfig& c = ctx.cfg;
            design = saddle_solve(ctx.frame().frame, c.M, c.T, c.N, ctx.omega, ctx.res, saddle_options(c));
        }
        return *design;
    }
};

std::uint64_t splitmix(std::uint64_t& s)
{
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t& s) { return static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53; }

// Tensor Gauss–Legendre integral of f over the cube x0 +- half.
double cube_integral(int dim, const Point& x0, double half, const std::function<double(const Point&)>& f)
{
    const Nodes1d q = composite_gauss(-half, half, 64, 8);
    double acc = 0.0;
    if (dim == 1) {
        for (std::size_t i = 0; i < q.x.size(); ++i)
            acc += q.w[i] * f({x0[0] + q.x[i], 0.0});
        return acc;
    }
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < q.x.size(); ++j)
            row += q.w[j] * f({x0[0] + q.x[i], x0[1] + q.x[j]});
        acc += q.w[i] * row;
    }
    return acc;
}

cplx cube_integral_c(int dim, const Point& x0, double half, const std::function<cplx(const Point&)>& f)
{
    const double re = cube_integral(dim, x0, half, [&](const Point& x) { return f(x).real(); });
    const double im = cube_integral(dim, x0, half, [&](const Point& x) { return f(x).imag(); });
    return {re, im};
}

SuiteResult suite_frame(Validation& v)
{
    SuiteResult r;
    const FrameOutcome& fo = v.ctx.frame();
    r.metrics["frame"] = frame_summary(fo);
    const DecayFit fit = fit_decay(fo.frame, v.ctx.cfg.k);
    r.metrics["decay_C"] = fit.C;
    r.metrics["decay_checked"] = fit.checked;
    r.metrics["decay_violations"] = fit.violations;
    r.pass = fo.certified && fo.frame.measured_error <= v.ctx.cfg.eta && fit.violations == 0;
    return r;
}

SuiteResult suite_packets(Validation& v)
{
    SuiteResult r;
    const Frame& f = v.ctx.frame().frame;
    const int d = f.params.dim;
    const double s2 = f.params.sigma * f.params.sigma;

    // Unit initial norm for a few retained indices.
    double unit_err = 0.0;
    const std::vector<Lattice> idx = pencil_indices(f.params, 5);
    for (const auto& n : idx) {
        const HeatPacket p = packet(f, n);
        const double m = cube_integral(d, p.x0, 8.0 * p.sigma, [&](const Point& x) { return std::norm(packet_value(p, 0.0, x)); });
        unit_err = std::max(unit_err, std::abs(m - 1.0));
    }

    // Evolved norm over a 5 x 5 sweep of (t, |xi|).
    double evolved_err = 0.0;
    for (double tf : {0.0, 0.01, 0.03, 0.1, 0.3}) {
        const double t = tf * s2;
        for (double a : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            HeatPacket p = packet(f, idx.front());
            p.xi = {a / f.params.sigma, d == 2 ? 0.5 * a / f.params.sigma : 0.0};
            const double s = s2 + t;
            const double closed = std::pow(s2 / s, 0.5 * d) * std::exp(-2.0 * t * s2 * norm2(p.xi, d) / s);
            const double m =
                cube_integral(d, p.x0, 8.0 * std::sqrt(s), [&](const Point& x) { return std::norm(packet_value(p, t, x)); });
            evolved_err = std::max(evolved_err, std::abs(m - closed) / closed);
        }
    }

    // Overlaps at t = 0.
    double overlap_err = 0.0;
    const Lattice base{};
    for (int k = 0; k <= 3; ++k) {
        Lattice m{};
        m[0] = k;
        if (d == 2)
            m[1] = k / 2;
        const HeatPacket p = packet(f, base), q = packet(f, m);
        const cplx g = cube_integral_c(d, p.x0, 8.0 * p.sigma, [&](const Point& x) {
            return packet_value(p, 0.0, x) * std::conj(packet_value(q, 0.0, x));
        });
        const double closed = std::exp(-s2 * static_cast<double>(lattice_norm2(m, d)) / (2.0 * f.params.L * f.params.L));
        overlap_err = std::max(overlap_err, std::abs(g - closed));
    }
    r.metrics["unit_norm_error"] = unit_err;
    r.metrics["evolved_norm_rel_error"] = evolved_err;
    r.metrics["overlap_error"] = overlap_err;
    r.pass = unit_err <= 1e-8 && evolved_err <= 1e-6 && overlap_err <= 1e-8;
    return r;
}

SuiteResult suite_kac(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const KacReport k = kac_check(v.ctx.bump, v.ctx.omega, v.ctx.res, c.kac_T, c.kac_tol);
    r.metrics["T"] = k.T;
    r.metrics["tol"] = k.tol;
    r.metrics["times"] = k.times;
    r.metrics["worst_low"] = k.worst_low;
    r.metrics["worst_excess"] = k.worst_excess;
    r.pass = k.pass;
    return r;
}

SuiteResult suite_energy(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const RealField g = sample(v.ctx.bump, v.ctx.omega, v.ctx.res);
    const FdSolution sol = fd_solve(g, c.T);
    const EnergyReport e = energy_check(sol, 1e-4);
    r.metrics["residual"] = e.residual;
    r.metrics["naive_residual"] = e.naive_residual;
    r.metrics["monotone"] = e.monotone;
    r.metrics["strictly_decreasing"] = e.strictly_decreasing;

    // Second-order convergence on the first Dirichlet mode of the box.
    const BoxDomain& box = v.ctx.omega;
    double lam = 0.0;
    for (int k = 0; k < box.dim; ++k)
        lam += std::pow(M_PI / box.extent(k), 2);
    std::vector<double> errs;
    for (int div : {4, 2, 1}) {
        const int n = std::max(4, c.resolution / div);
        RealField m(box, uniform_resolution(box.dim, n));
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Point x = m.center(i);
            double val = 1.0;
            for (int k = 0; k < box.dim; ++k)
                val *= std::sin(M_PI * (x[k] - box.lo[k]) / box.extent(k));
            m[i] = val;
        }
        FdOptions fo;
        fo.snapshot_times = {c.T};
        fo.boundary_tol = 1.0;
        const FdSolution s = fd_solve(m, c.T, fo);
        const double decay = std::exp(-lam * s.snapshot_times.front());
        double err = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            err = std::max(err, std::abs(s.snapshots.front()[i].real() - m[i] * decay));
        errs.push_back(err / decay);
    }
    std::vector<double> factors;
    bool conv = true;
    for (std::size_t i = 1; i < errs.size(); ++i) {
        factors.push_back(errs[i - 1] / errs[i]);
        conv = conv && std::abs(factors.back() - 4.0) <= 0.5;
    }
    r.metrics["mode_errors"] = errs;
    r.metrics["convergence_factors"] = factors;
    r.pass = e.residual <= 1e-4 && e.strictly_decreasing && conv;
    return r;
}

SuiteResult suite_heat_short_time(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const double eta0 = default_eta0(c, v.ctx.bump, v.ctx.observation());
    const double d4 = std::pow(c.delta, 4);
    const WholeVsDomainReport w = whole_vs_domain_check(v.ctx.bump, v.ctx.omega, v.ctx.res, 0.5 * eta0 * d4, eta0);
    const WholeVsDomainReport tiny = whole_vs_domain_check(v.ctx.bump, v.ctx.omega, v.ctx.res, 1e-9, eta0);
    const double limit = short_time_limit(v.ctx.bump, eta0, c.c_sd);
    const ShortTimeReport st = short_time_check(v.ctx.bump, v.ctx.omega, v.ctx.res, eta0, 0.999 * limit, c.c_sd);
    r.metrics["eta0"] = eta0;
    r.metrics["whole_vs_domain"] = {{"T", w.T}, {"measured", w.measured}, {"bound", w.bound}, {"pass", w.pass}};
    r.metrics["whole_vs_domain_tiny"] = {{"T", tiny.T}, {"measured", tiny.measured}};
    r.metrics["short_time"] = {{"t", st.t},
                               {"limit", st.limit},
                               {"measured", st.measured},
                               {"pass", st.pass},
                               {"monotone", st.monotone}};
    r.pass = w.pass && st.pass;
    return r;
}

SuiteResult suite_gramian(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const Frame& f = v.ctx.frame().frame;
    const ObservationSet& omega = v.ctx.observation();
    check_gramian_hypothesis(f.params, f.x0, omega.domain, c.T);

    DiagBoundOptions dopt;
    dopt.perturb = c.fault_perturb;
    const std::vector<DiagBound> diag = diag_bounds_all(f, f.params.S, omega, c.T, dopt);
    std::size_t dviol = 0;
    double low_ratio = std::numeric_limits<double>::infinity(), high_ratio = 0.0;
    for (const auto& b : diag) {
        dviol += !b.ok();
        low_ratio = std::min(low_ratio, b.value / b.lower);
        high_ratio = std::max(high_ratio, b.value / b.upper);
    }

    GramianPencil pen;
    pen.dim = f.params.dim;
    pen.T = c.T;
    pen.indices = pencil_indices(f.params, static_cast<std::size_t>(c.pencil_size));
    std::vector<HeatPacket> packets;
    for (const auto& n : pen.indices)
        packets.push_back(packet(f, n));
    pen.G = gramian_matrix(packets, omega, c.T);
    const std::vector<OffdiagBound> off = offdiag_bounds_pencil(f, pen, omega);
    std::size_t oviol = 0;
    double off_ratio = 0.0;
    for (const auto& b : off) {
        oviol += !b.ok();
        off_ratio = std::max(off_ratio, b.value / b.bound);
    }
    r.metrics["kappa"] = gramian_constant(f.params.dim);
    r.metrics["fault_perturb"] = c.fault_perturb;
    r.metrics["diag_checked"] = diag.size();
    r.metrics["diag_violations"] = dviol;
    r.metrics["min_value_over_lower"] = low_ratio;
    r.metrics["max_value_over_upper"] = high_ratio;
    r.metrics["pairs_checked"] = off.size();
    r.metrics["offdiag_violations"] = oviol;
    r.metrics["max_value_over_bound"] = off_ratio;
    r.pass = dviol == 0 && oviol == 0;
    return r;
}

SuiteResult suite_pencil(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const PencilAttempt pa = pencil_with_halving(v.ctx.frame().frame, v.ctx.observation(), v.ctx.res, c.T, c.pencil_size);
    const PencilMin pm = c_det_pencil(pa.pencil);
    std::uint64_t state = c.seed;
    double min_rq = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i)
        min_rq = std::min(min_rq, rayleigh(pa.pencil.G, pa.pencil.H, random_signs(pa.pencil.indices.size(), state)));
    const double at_vec = rayleigh(pa.pencil.G, pa.pencil.H, pm.vector);
    const double gap = std::abs(at_vec - pm.lambda_raw);
    r.metrics["size_requested"] = c.pencil_size;
    r.metrics["sizes_tried"] = pa.tried;
    r.metrics["size_used"] = pa.pencil.indices.size();
    r.metrics["h_min_eig"] = pa.pencil.h_min_eig;
    r.metrics["h_max_eig"] = pa.pencil.h_max_eig;
    r.metrics["lambda_min"] = pm.lambda_min;
    r.metrics["lambda_raw"] = pm.lambda_raw;
    r.metrics["min_random_rayleigh"] = min_rq;
    r.metrics["rayleigh_at_eigenvector"] = at_vec;
    r.metrics["equality_gap"] = gap;
    r.pass = pa.pencil.h_min_eig > 0.0 && pm.lambda_min <= min_rq && gap <= 1e-6;
    return r;
}

SuiteResult suite_sandwich(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const FrameOutcome& fo = v.ctx.frame();
    const ObservationSet& omega = v.ctx.observation();
    if (fo.frame.params.S.size() > c.sandwich_max_packets || omega.measure() == 0.0) {
        r.skipped = true;
        r.pass = true;
        r.metrics["reason"] = omega.measure() == 0.0 ? "empty observation set"
                                                     : "packet span of " + std::to_string(fo.frame.params.S.size()) +
                                                           " packets exceeds sandwich_max_packets";
        return r;
    }
    SandwichOptions so;
    so.trials = c.trials;
    so.seed = c.seed;
    so.eta = c.eta;
    so.eta0 = default_eta0(c, v.ctx.bump, omega);
    so.c_sd = c.c_sd;
    so.throw_on_violation = false;
    const double T = c.sandwich_fraction * short_time_limit(v.ctx.bump, so.eta0, c.c_sd);
    const SandwichReport rep = sandwich_check(fo.frame, v.ctx.bump, omega, T, so);
    r.metrics = sandwich_json(rep);
    r.metrics.erase("trials");
    r.metrics["eta0"] = so.eta0;
    r.metrics["trials"] = rep.trials.size();
    r.pass = rep.pass && rep.min_packet > 0.0 && rep.pencil_min > 0.0;
    return r;
}

SuiteResult suite_observability(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const Frame& f = v.ctx.frame().frame;
    const ObservationSet& omega = v.ctx.observation();
    const PacketConstant rp = c_rand_packets(f, omega, c.T);
    const SpectralConstant sp = c_rand_spectral(omega, c.T, c.modes_cap);
    const SpectralConstant sp2 = c_rand_spectral(omega, c.T, 2 * c.modes_cap);
    bool ok = rp.value >= 0.0 && sp.value >= 0.0;
    // Halve the mask by a coordinate cut through its center of mass.
    ObservationSet smaller = omega;
    if (!omega.full_space) {
        double mass = 0.0, moment = 0.0;
        for (std::size_t i = 0; i < omega.mask.size(); ++i) {
            mass += omega.mask[i];
            moment += omega.mask[i] * omega.mask.center(i)[0];
        }
        const double cut = mass > 0.0 ? moment / mass : 0.0;
        for (std::size_t i = 0; i < smaller.mask.size(); ++i)
            if (smaller.mask.center(i)[0] > cut)
                smaller.mask[i] = 0.0;
        smaller = observation_from_mask(smaller.mask);
    }
    const PacketConstant rp_small = c_rand_packets(f, smaller, c.T);
    const SpectralConstant sp_small = c_rand_spectral(smaller, c.T, c.modes_cap);
    const bool monotone = rp_small.value <= rp.value && sp_small.value <= sp.value;
    const bool cap_stable = sp.rank >= c.modes_cap || sp2.value == sp.value;
    r.metrics["c_rand_packets"] = rp.value;
    r.metrics["c_rand_packets_argmin"] = to_json(rp.argmin, c.dim);
    r.metrics["c_rand_spectral"] = sp.value;
    r.metrics["c_rand_spectral_rank"] = sp.rank;
    r.metrics["c_rand_spectral_doubled_cap"] = sp2.value;
    r.metrics["c_rand_packets_half_mask"] = rp_small.value;
    r.metrics["c_rand_spectral_half_mask"] = sp_small.value;
    r.metrics["mask_monotone"] = monotone;
    r.metrics["cap_stable"] = cap_stable;
    r.pass = ok && monotone && cap_stable;
    return r;
}

SuiteResult suite_saddle(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const DesignSolution& s = v.solution();
    r.metrics["design"] = solution_json(s, c.dim);
    r.metrics["design"].erase("alpha");

    // Small random instances: the weak-duality gap certifies the optimum.
    std::uint64_t state = c.seed ^ 0x5eedull;
    double worst_gap = 0.0;
    int instances = 0;
    for (int t = 0; t < 60; ++t) {
        const int cells = 2 + static_cast<int>(uniform01(state) * 15.0);
        const int P = 1 + static_cast<int>(uniform01(state) * 4.0);
        BoxDomain box;
        box.dim = 1;
        box.lo = {0.0, 0.0};
        box.hi = {1.0, 0.0};
        std::vector<RealField> rho;
        for (int p = 0; p < P; ++p) {
            RealField f(box, uniform_resolution(1, cells));
            for (auto& x : f.values)
                x = uniform01(state);
            rho.push_back(std::move(f));
        }
        const double M = 0.05 + 0.9 * uniform01(state);
        SaddleOptions so = saddle_options(c);
        const DesignSolution d = saddle_solve_densities(rho, M, so);
        worst_gap = std::max(worst_gap, d.gap);
        ++instances;
    }
    r.metrics["small_instances"] = instances;
    r.metrics["small_worst_gap"] = worst_gap;
    r.pass = s.gap <= c.tol && s.fractional_cells <= 1 && worst_gap <= 1e-6;
    return r;
}

SuiteResult suite_stability(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const StabilityReport st =
        stability_study(v.ctx.frame().frame, c.M, c.T, c.stability, v.ctx.omega, v.ctx.res, saddle_options(c));
    r.metrics = stability_json(st);
    r.pass = st.stabilized && !st.symdiff.empty() && st.symdiff.back() == 0.0;
    return r;
}

SuiteResult suite_h1(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const DesignSolution& s = v.solution();
    const auto dens = energy_densities(v.ctx.frame().frame, s.indices, c.T, v.ctx.omega, v.ctx.res);
    std::vector<RealField> rho;
    for (const auto& d : dens)
        rho.push_back(d.rho);
    const LevelSetReport lv = h1_levelset_check(s.alpha, rho);
    r.metrics = levelset_json(lv);
    r.pass = lv.pass;
    return r;
}

SuiteResult suite_h2(Validation& v)
{
    SuiteResult r;
    const ExperimentConfig& c = v.ctx.cfg;
    const GammaReport g = h2_gamma_check(v.ctx.frame().frame, v.ctx.observation(), c.T);
    r.metrics = gamma_json(g, c.dim);
    r.pass = g.pass;
    return r;
}

using SuiteFn = SuiteResult (*)(Validation&);

const std::vector<std::pair<std::string, SuiteFn>>& suites()
{
    static const std::vector<std::pair<std::string, SuiteFn>> table = {
        {"frame", suite_frame},
        {"packets", suite_packets},
        {"kac", suite_kac},
        {"energy", suite_energy},
        {"heat_short_time", suite_heat_short_time},
        {"gramian", suite_gramian},
        {"pencil", suite_pencil},
        {"sandwich", suite_sandwich},
        {"observability", suite_observability},
        {"saddle", suite_saddle},
        {"stability", suite_stability},
        {"h1", suite_h1},
        {"h2", suite_h2},
    };
    return table;
}

} // namespace

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& s : suites())
            n.push_back(s.first);
        return n;
    }();
    return names;
}

CommandResult cmd_validate(const ExperimentConfig& cfg, const CommandOptions& opt)
{
    CommandResult r;
    Stopwatch total;
    r.report = report_header("validate", cfg);
    try {
        for (const auto& name : opt.suites)
            if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
                fail(ErrorKind::ConfigError, "unknown suite '" + name + "'");
        Validation v(cfg);
        json out = json::array();
        bool all = true;
        for (const auto& [name, fn] : suites()) {
            if (!opt.suites.empty() && std::find(opt.suites.begin(), opt.suites.end(), name) == opt.suites.end())
                continue;
            Stopwatch sw;
            json s;
            s["name"] = name;
            try {
                SuiteResult res = fn(v);
                s["pass"] = res.pass;
                s["skipped"] = res.skipped;
                s["metrics"] = std::move(res.metrics);
                all = all && res.pass;
            } catch (const Error& e) {
                s["pass"] = false;
                s["skipped"] = false;
                s["error"] = error_json(e);
                all = false;
            }
            r.timings[name] = sw.seconds();
            out.push_back(std::move(s));
        }
        r.report["suites"] = std::move(out);
        r.report["pass"] = all;
        r.exit_code = all ? 0 : exit_code(ErrorKind::AssertionFailure);
    } catch (const Error& e) {
        r.report["pass"] = false;
        r.report["error"] = error_json(e);
        r.exit_code = exit_code(e.kind());
    }
    r.timings["total"] = total.seconds();
    write_report(opt.out_dir, "validate.json", r.report);
    return r;
}

} // namespace heatpack
