#include "command_util.hpp"

#include "heatpack/error.hpp"
#include "heatpack/parallel.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

namespace heatpack {

namespace detail {

RunContext::RunContext(const ExperimentConfig& c)
    : cfg(c), omega(config_domain(c)), res(config_resolution(c)), bump(config_bump(c))
{
    bump.validate(omega);
}

const FrameOutcome& RunContext::frame()
{
    if (!frame_)
        frame_ = build_frame_or_best(bump, cfg.eta, config_search(cfg));
    return *frame_;
}

const ObservationSet& RunContext::observation()
{
    if (!obs_)
        obs_ = config_observation(cfg);
    return *obs_;
}

json frame_summary(const FrameOutcome& f)
{
    const FrameParams& p = f.frame.params;
    json j;
    j["dim"] = p.dim;
    j["mode"] = mode_name(p.mode);
    j["sigma"] = p.sigma;
    j["L"] = p.L;
    j["log_inv_epsilon"] = p.log_inv_epsilon;
    j["loglog_inv_epsilon"] = p.loglog();
    j["epsilon"] = p.epsilon;
    j["modes"] = p.S.size();
    j["eta"] = p.eta;
    j["measured_error"] = f.frame.measured_error;
    j["certified"] = f.certified;
    if (!f.note.empty())
        j["note"] = f.note;
    return j;
}

json solution_json(const DesignSolution& s, int dim)
{
    json j;
    j["N"] = s.N;
    j["value"] = s.value;
    j["upper"] = s.upper;
    j["gap"] = s.gap;
    j["lambda"] = s.lambda;
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    j["fractional_cells"] = s.fractional_cells;
    j["degenerate"] = s.degenerate;
    j["mask_hash"] = hash_hex(mask_hash(s.a));
    j["mask_mass"] = integrate(s.a);
    json alpha = json::array();
    for (std::size_t i = 0; i < s.indices.size(); ++i)
        if (s.alpha[i] > 1e-12)
            alpha.push_back({{"n", to_json(s.indices[i], dim)}, {"alpha", s.alpha[i]}});
    j["alpha"] = std::move(alpha);
    return j;
}

json levelset_json(const LevelSetReport& r)
{
    return {{"tolerance", r.tolerance},     {"levels", r.levels},       {"min_flagged", r.min_flagged},
            {"min_level", r.min_level},     {"allowance", r.allowance}, {"max_flagged", r.max_flagged},
            {"degenerate", r.degenerate},   {"pass", r.pass}};
}

json gamma_json(const GammaReport& r, int dim)
{
    return {{"first", to_json(r.first, dim)},
            {"first_xi", r.first_xi},
            {"gamma1", r.gamma1},
            {"top", to_json(r.top, dim)},
            {"top_xi", r.top_xi},
            {"quotient_top", r.quotient_top},
            {"ratio", r.ratio},
            {"u1", r.u1},
            {"u2", r.u2},
            {"pass", r.pass}};
}

json stability_json(const StabilityReport& r)
{
    json rows = json::array();
    for (std::size_t i = 0; i < r.solutions.size(); ++i) {
        const DesignSolution& s = r.solutions[i];
        json row = {{"N", s.N},
                    {"value", s.value},
                    {"gap", s.gap},
                    {"lambda", s.lambda},
                    {"fractional_cells", s.fractional_cells},
                    {"mask_hash", hash_hex(mask_hash(s.a))}};
        if (i > 0) {
            row["symdiff_prev"] = r.symdiff[i - 1];
            row["hausdorff_prev"] = r.hausdorff[i - 1];
            row["agree_prev"] = static_cast<bool>(r.agree[i - 1]);
        }
        rows.push_back(std::move(row));
    }
    return {{"table", std::move(rows)},
            {"stabilized", r.stabilized},
            {"symdiff_tail_nonincreasing", r.symdiff_tail_nonincreasing}};
}

json sandwich_json(const SandwichReport& r)
{
    json trials = json::array();
    for (const auto& t : r.trials)
        trials.push_back({{"packet_quotient", t.packet_quotient},
                          {"fd_quotient", t.fd_quotient},
                          {"ratio", t.ratio},
                          {"pass", t.pass}});
    return {{"T", r.T},
            {"eta", r.eta},
            {"short_time_limit", r.short_time_limit},
            {"short_time_ok", r.short_time_ok},
            {"seed", r.seed},
            {"min_packet_quotient", r.min_packet},
            {"min_fd_quotient", r.min_fd},
            {"min_ratio", r.min_ratio},
            {"max_ratio", r.max_ratio},
            {"pencil_min", r.pencil_min},
            {"pass", r.pass},
            {"trials", std::move(trials)}};
}

double default_eta0(const ExperimentConfig& cfg, const BumpSpec& bump, const ObservationSet& omega)
{
    const RealField mask = omega.full_space ? RealField(omega.domain, config_resolution(cfg), 1.0) : omega.mask;
    const double m0 = measure_m0(bump, mask, cfg.T);
    return cfg.eta * m0 / bump_norms(bump.dim).c0;
}

PencilAttempt pencil_with_halving(const Frame& frame, const ObservationSet& omega, const Resolution& res, double T,
                                  int size)
{
    PencilAttempt out;
    int n = std::min<int>(size, static_cast<int>(frame.params.S.size()));
    while (true) {
        out.tried.push_back(n);
        try {
            out.pencil = assemble_pencil(frame, pencil_indices(frame.params, static_cast<std::size_t>(n)), omega, res, T);
            return out;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PencilDegenerate || n == 1)
                throw;
            out.note = e.what();
            n /= 2;
        }
    }
}

SaddleOptions saddle_options(const ExperimentConfig& cfg)
{
    SaddleOptions o;
    o.iters = cfg.iters;
    o.tol = cfg.tol;
    o.step_c = cfg.step_c;
    return o;
}

void write_report(const std::string& dir, const std::string& name, const json& j)
{
    if (dir.empty())
        return;
    std::filesystem::create_directories(dir);
    write_text((std::filesystem::path(dir) / name).string(), dump_json(j) + "\n");
}

} // namespace detail

using namespace detail;

json error_json(const Error& e)
{
    json vals = json::array();
    for (double v : e.values())
        vals.push_back(v);
    return {{"kind", kind_name(e.kind())}, {"message", e.what()}, {"values", std::move(vals)}};
}

json report_header(const std::string& command, const ExperimentConfig& cfg)
{
    json j;
    j["command"] = command;
    j["config_hash"] = hash_hex(config_hash(cfg));
    j["config"] = config_json(cfg);
    return j;
}

CommandResult cmd_decompose(const ExperimentConfig& cfg, const CommandOptions& opt)
{
    CommandResult r;
    Stopwatch sw;
    r.report = report_header("decompose", cfg);
    try {
        RunContext ctx(cfg);
        const FrameOutcome& fo = ctx.frame();
        r.timings["frame"] = sw.seconds();
        r.report["frame"] = frame_summary(fo);
        const DecayFit fit = fit_decay(fo.frame, cfg.k);
        r.report["decay_fit"] = {{"k", fit.k},
                                 {"C", fit.C},
                                 {"fitted", fit.fitted},
                                 {"checked", fit.checked},
                                 {"violations", fit.violations},
                                 {"worst_ratio", fit.worst_ratio}};
        const bool pass = fo.certified && fo.frame.measured_error <= cfg.eta;
        r.report["pass"] = pass;
        if (!pass)
            r.exit_code = exit_code(ErrorKind::FrameErrorExceeded);
        if (!opt.out_dir.empty())
            write_report(opt.out_dir, "frame.json", frame_to_json(fo.frame));
    } catch (const Error& e) {
        r.report["pass"] = false;
        r.report["error"] = error_json(e);
        r.exit_code = exit_code(e.kind());
    }
    r.timings["total"] = sw.seconds();
    write_report(opt.out_dir, "decompose.json", r.report);
    return r;
}

CommandResult cmd_design(const ExperimentConfig& cfg, const CommandOptions& opt)
{
    CommandResult r;
    Stopwatch sw;
    r.report = report_header("design", cfg);
    try {
        RunContext ctx(cfg);
        const FrameOutcome& fo = ctx.frame();
        r.report["frame"] = frame_summary(fo);
        r.timings["frame"] = sw.seconds();
        DesignSolution sol;
        try {
            sol = saddle_solve(fo.frame, cfg.M, cfg.T, cfg.N, ctx.omega, ctx.res, saddle_options(cfg));
        } catch (const SaddleNoConvergence& e) {
            sol = e.best();
            r.report["error"] = error_json(e);
            r.exit_code = exit_code(e.kind());
        }
        r.timings["saddle"] = sw.seconds();
        r.report["design"] = solution_json(sol, cfg.dim);

        const auto dens = energy_densities(fo.frame, sol.indices, cfg.T, ctx.omega, ctx.res);
        std::vector<RealField> rho;
        for (const auto& d : dens)
            rho.push_back(d.rho);
        r.report["h1"] = levelset_json(h1_levelset_check(sol.alpha, rho));

        if (!opt.stability.empty()) {
            const StabilityReport st =
                stability_study(fo.frame, cfg.M, cfg.T, opt.stability, ctx.omega, ctx.res, saddle_options(cfg));
            r.report["stability"] = stability_json(st);
            r.timings["stability"] = sw.seconds();
        }
        if (!opt.out_dir.empty()) {
            std::filesystem::create_directories(opt.out_dir);
            write_text((std::filesystem::path(opt.out_dir) / "mask.pgm").string(), to_pgm(sol.a));
            write_text((std::filesystem::path(opt.out_dir) / "mask.hpgrid").string(), to_hpgrid(sol.a));
        }
    } catch (const Error& e) {
        r.report["error"] = error_json(e);
        r.exit_code = exit_code(e.kind());
    }
    r.timings["total"] = sw.seconds();
    write_report(opt.out_dir, "design.json", r.report);
    return r;
}

namespace {

json sandwich_block(RunContext& ctx, const FrameOutcome& fo, const ObservationSet& omega, int& exit_code_out,
                    std::vector<double>& samples)
{
    const ExperimentConfig& cfg = ctx.cfg;
    const std::size_t P = fo.frame.params.S.size();
    if (omega.measure() == 0.0)
        return {{"skipped", true}, {"reason", "empty observation set"}};
    if (P > cfg.sandwich_max_packets)
        return {{"skipped", true},
                {"reason", "packet span of " + std::to_string(P) + " packets exceeds sandwich_max_packets = " +
                               std::to_string(cfg.sandwich_max_packets)}};
    SandwichOptions so;
    so.trials = cfg.trials;
    so.seed = cfg.seed;
    so.eta = cfg.eta;
    so.eta0 = default_eta0(cfg, ctx.bump, omega);
    so.c_sd = cfg.c_sd;
    so.throw_on_violation = false;
    const double T = cfg.sandwich_fraction * short_time_limit(ctx.bump, so.eta0, cfg.c_sd);
    try {
        const SandwichReport rep = sandwich_check(fo.frame, ctx.bump, omega, T, so);
        for (const auto& t : rep.trials)
            samples.push_back(t.fd_quotient);
        json j = sandwich_json(rep);
        j["skipped"] = false;
        j["eta0"] = so.eta0;
        // Every FD sample sits above the span minimum up to the frame slack.
        bool above = std::isfinite(rep.pencil_min);
        for (double v : samples)
            above = above && v >= rep.pencil_min * (1.0 - fo.frame.measured_error);
        j["samples_above_pencil_min"] = above;
        if (!rep.pass)
            exit_code_out = exit_code(ErrorKind::SandwichViolation);
        return j;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::PreconditionViolation)
            throw;
        return {{"skipped", true}, {"reason", e.what()}};
    }
}

} // namespace

CommandResult cmd_observe(const ExperimentConfig& cfg, const CommandOptions& opt)
{
    CommandResult r;
    Stopwatch sw;
    r.report = report_header("observe", cfg);
    try {
        RunContext ctx(cfg);
        if (!opt.mask_path.empty()) {
            RealField m = real_from_hpgrid(read_text(opt.mask_path));
            if (m.dim() != cfg.dim)
                fail(ErrorKind::ConfigError, "mask file dimension does not match the config");
            ctx.set_observation(observation_from_mask(m));
        }
        const ObservationSet& omega = ctx.observation();
        const FrameOutcome& fo = ctx.frame();
        r.report["frame"] = frame_summary(fo);
        r.report["mask"] = {{"hash", hash_hex(omega.full_space ? 0 : mask_hash(omega.mask))},
                            {"measure_fraction", omega.M}};
        r.timings["frame"] = sw.seconds();

        json c;
        const PacketConstant rp = c_rand_packets(fo.frame, omega, cfg.T);
        c["c_rand_packets"] = rp.value;
        c["c_rand_packets_argmin"] = to_json(rp.argmin, cfg.dim);
        r.timings["c_rand_packets"] = sw.seconds();

        const PencilAttempt pa = pencil_with_halving(fo.frame, omega, ctx.res, cfg.T, cfg.pencil_size);
        const PencilMin pm = c_det_pencil(pa.pencil);
        c["c_det_pencil"] = pm.lambda_min;
        c["c_det_pencil_raw"] = pm.lambda_raw;
        c["pencil_size"] = pa.pencil.indices.size();
        c["pencil_sizes_tried"] = pa.tried;
        if (!pa.note.empty())
            c["pencil_note"] = pa.note;
        r.timings["c_det_pencil"] = sw.seconds();

        const SpectralConstant sp = c_rand_spectral(omega, cfg.T, cfg.modes_cap);
        c["c_rand_spectral"] = sp.value;
        c["c_rand_spectral_mode"] = sp.mode;
        c["c_rand_spectral_rank"] = sp.rank;

        std::vector<double> samples;
        int sandwich_exit = 0;
        json sw_json = sandwich_block(ctx, fo, omega, sandwich_exit, samples);
        r.timings["sandwich"] = sw.seconds();
        json js = json::array();
        for (double v : samples)
            js.push_back(v);
        double c_true = 0.0;
        if (!samples.empty())
            c_true = *std::min_element(samples.begin(), samples.end());
        c["c_true_min"] = samples.empty() && omega.measure() > 0.0 ? json(nullptr) : json(c_true);
        c["c_true_samples"] = std::move(js);
        c["nonnegative"] = rp.value >= 0.0 && pm.lambda_min >= 0.0 && sp.value >= 0.0;
        r.report["constants"] = std::move(c);
        r.report["sandwich"] = std::move(sw_json);
        r.exit_code = sandwich_exit;
        if (!opt.out_dir.empty())
            write_pencil(pa.pencil, (std::filesystem::path(opt.out_dir) / "pencil").string());
    } catch (const Error& e) {
        r.report["error"] = error_json(e);
        r.exit_code = exit_code(e.kind());
    }
    r.timings["total"] = sw.seconds();
    write_report(opt.out_dir, "observe.json", r.report);
    return r;
}

CommandResult cmd_kernel(const ExperimentConfig& cfg, const CommandOptions& opt, const std::vector<double>& times)
{
    CommandResult r;
    r.report = report_header("kernel", cfg);
    try {
        const BoxDomain omega = config_domain(cfg);
        const RealField grid(omega, config_resolution(cfg));
        Point y = cfg.bump_center;
        if (cfg.dim == 1)
            y[1] = 0.0;
        std::vector<double> ts = times;
        if (ts.empty())
            ts = {0.25 * cfg.T, 0.5 * cfg.T, cfg.T};
        std::string csv = cfg.dim == 1 ? "t,x,free_kernel,kac_bound\n" : "t,x1,x2,free_kernel,kac_bound\n";
        json summary = json::array();
        for (double t : ts) {
            if (!(t > 0.0))
                fail(ErrorKind::NonpositiveTime, "kernel times must be positive");
            double kmax = 0.0, bmax = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const Point x = grid.center(i);
                const double k = free_kernel(cfg.dim, t, x, y);
                // Kac bound with the grid point as the source.
                const double b = kac_bound(t, x, omega);
                kmax = std::max(kmax, k);
                bmax = std::max(bmax, b);
                csv += format_double(t) + "," + format_double(x[0]) + ",";
                if (cfg.dim == 2)
                    csv += format_double(x[1]) + ",";
                csv += format_double(k) + "," + format_double(b) + "\n";
            }
            summary.push_back({{"t", t}, {"max_free_kernel", kmax}, {"max_kac_bound", bmax}});
        }
        r.report["source"] = to_json(y, cfg.dim);
        r.report["times"] = std::move(summary);
        if (!opt.out_dir.empty()) {
            std::filesystem::create_directories(opt.out_dir);
            write_text((std::filesystem::path(opt.out_dir) / "kernel.csv").string(), csv);
        }
    } catch (const Error& e) {
        r.report["error"] = error_json(e);
        r.exit_code = exit_code(e.kind());
    }
    write_report(opt.out_dir, "kernel.json", r.report);
    return r;
}

} // namespace heatpack
