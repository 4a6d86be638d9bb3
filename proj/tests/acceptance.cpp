// One pass/fail line per acceptance criterion. Exit status is the number of
// failing criteria.
#include "heatpack/commands.hpp"
#include "heatpack/design_solver.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <cstdio>
#include <map>
#include <random>

using namespace heatpack;

namespace {

struct Run {
    json report;
    json timings;
    std::map<std::string, json> suites;
};

Run validate(const std::string& config, const std::vector<std::string>& suites = {})
{
    CommandOptions o;
    o.suites = suites;
    const CommandResult r = cmd_validate(testing_support::config(config), o);
    Run run{r.report, r.timings, {}};
    if (r.report.contains("suites"))
        for (const auto& s : r.report["suites"])
            run.suites[s["name"].get<std::string>()] = s;
    return run;
}

bool suite_pass(const Run& r, const std::string& name)
{
    const auto it = r.suites.find(name);
    return it != r.suites.end() && it->second["pass"].get<bool>() && !it->second["skipped"].get<bool>();
}

double metric(const Run& r, const std::string& suite, const std::string& key)
{
    const auto it = r.suites.find(suite);
    if (it == r.suites.end() || !it->second.contains("metrics") || !it->second["metrics"].contains(key))
        return std::nan("");
    return it->second["metrics"][key].get<double>();
}

int failures = 0;

void line(int id, bool ok, const std::string& detail)
{
    std::printf("criterion %2d %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

} // namespace

int main()
{
    const Run d1 = validate("default_1d.conf");
    const Run d1b = validate("default_1d.conf");
    const Run d2 = validate("default_2d.conf", {"frame", "saddle", "h2"});
    const Run pk = validate("packets_1d.conf", {"pencil", "sandwich", "saddle"});

    {
        const double e1 = d1.suites.at("frame")["metrics"]["frame"]["measured_error"].get<double>();
        const double e2 = d2.suites.at("frame")["metrics"]["frame"]["measured_error"].get<double>();
        const double t1 = d1.timings["frame"].get<double>(), t2 = d2.timings["frame"].get<double>();
        const bool ok1 = suite_pass(d1, "frame") && e1 <= 0.1 && t1 < 60.0;
        const bool ok2 = suite_pass(d2, "frame") && e2 <= 0.1 && t2 < 60.0;
        line(1, ok1 && ok2,
             fmt("frame error 1-D %.6g (%.1f s), ", e1, t1) + fmt("2-D %.6g (%.1f s), eta 0.1", e2, t2));
    }

    line(2, suite_pass(d1, "packets"),
         fmt("unit norm %.2e (1e-8), evolved norm %.2e (1e-6), overlap %.2e (1e-8)", metric(d1, "packets", "unit_norm_error"),
             metric(d1, "packets", "evolved_norm_rel_error"), metric(d1, "packets", "overlap_error")));

    line(3, suite_pass(d1, "kac") && metric(d1, "kac", "tol") == 1e-4,
         fmt("worst low %.3g, worst excess %.3g, tol %.0e", metric(d1, "kac", "worst_low"), metric(d1, "kac", "worst_excess"),
             metric(d1, "kac", "tol")));

    line(4, suite_pass(d1, "gramian"),
         fmt("diagonal violations %.0f of %.0f, ", metric(d1, "gramian", "diag_violations"),
             metric(d1, "gramian", "diag_checked")) +
             fmt("off-diagonal violations %.0f of %.0f pairs", metric(d1, "gramian", "offdiag_violations"),
                 metric(d1, "gramian", "pairs_checked")));

    line(5, suite_pass(pk, "pencil"),
         fmt("h_min %.3g, lambda_min %.6g, equality gap %.2e", metric(pk, "pencil", "h_min_eig"),
             metric(pk, "pencil", "lambda_min"), metric(pk, "pencil", "equality_gap")));

    line(6, suite_pass(pk, "sandwich") && metric(pk, "sandwich", "min_packet_quotient") > 0.0,
         fmt("ratios [%.6f, %.6f], C_T^A %.6g", metric(pk, "sandwich", "min_ratio"), metric(pk, "sandwich", "max_ratio"),
             metric(pk, "sandwich", "min_packet_quotient")));

    {
        // exhaustive comparison on small instances
        std::mt19937 rng(2024);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        int instances = 0;
        for (int t = 0; t < 60; ++t) {
            const int cells = 2 + t % 15;
            const int P = 1 + t % 3;
            std::vector<RealField> rho;
            for (int p = 0; p < P; ++p) {
                RealField f(testing_support::interval(0.0, 1.0), uniform_resolution(1, cells));
                for (auto& v : f.values)
                    v = u(rng);
                rho.push_back(std::move(f));
            }
            const double M = 0.05 + 0.9 * u(rng);
            const DesignSolution s = saddle_solve_densities(rho, M);
            worst = std::max(worst, std::abs(s.value - oracle::lp_design_optimum(rho, M)));
            ++instances;
        }
        double gap = 0.0, frac = 0.0;
        bool shipped = true;
        for (const Run* r : {&d1, &d2, &pk}) {
            if (!r->suites.count("saddle") || !r->suites.at("saddle").contains("metrics")) {
                shipped = false;
                continue;
            }
            const json& des = r->suites.at("saddle")["metrics"]["design"];
            gap = std::max(gap, des["gap"].get<double>());
            frac = std::max(frac, des["fractional_cells"].get<double>());
            shipped = shipped && suite_pass(*r, "saddle");
        }
        line(7, worst <= 1e-6 && gap <= 1e-6 && frac <= 1.0 && shipped,
             fmt("oracle worst |diff| %.2e over %.0f instances, shipped gap %.2e", worst, instances, gap) +
                 fmt(", fractional cells <= %.0f", frac));
    }

    {
        const json& st = d1.suites.at("stability")["metrics"];
        const json& rows = st["table"];
        const double sd = rows.size() < 2 ? std::nan("") : rows.back()["symdiff_prev"].get<double>();
        line(8, suite_pass(d1, "stability") && sd == 0.0, fmt("last pair symmetric difference %.3g", sd));
    }

    line(9, suite_pass(d1, "h2") && suite_pass(d2, "h2"),
         fmt("quotient/gamma1 1-D %.3g, 2-D %.3g", metric(d1, "h2", "ratio"), metric(d2, "h2", "ratio")));

    line(10, suite_pass(d1, "energy"),
         fmt("residual %.2e (1e-4), convergence factors %.4f %.4f", metric(d1, "energy", "residual"),
             d1.suites.at("energy")["metrics"]["convergence_factors"][0].get<double>(),
             d1.suites.at("energy")["metrics"]["convergence_factors"][1].get<double>()));

    const std::string a = dump_json(d1.report), b = dump_json(d1b.report);
    line(11, a == b, fmt("two default 1-D validate reports, %.0f bytes each", static_cast<double>(a.size())));

    return failures;
}
