#include "heatpack/commands.hpp"
#include "heatpack/error.hpp"
#include "heatpack/parallel.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>

using namespace heatpack;

namespace {

void emit(const CommandResult& r, const std::string& out_dir, const std::string& name)
{
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text((std::filesystem::path(out_dir) / (name + "_timings.json")).string(), dump_json(r.timings) + "\n");
    } else {
        std::cout << dump_json(r.report) << "\n";
    }
    if (r.report.contains("error"))
        std::cerr << "heatpack " << name << ": " << r.report["error"]["kind"].get<std::string>() << ": "
                  << r.report["error"]["message"].get<std::string>() << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Heat-packet observability and sensor design"};
    app.require_subcommand(1);

    std::string config_path, out_dir, stability, mask_path, times;
    std::vector<std::string> suites;
    std::vector<std::string> overrides;
    unsigned thread_count = 0;
    std::uint64_t seed = 0;

    app.add_option("--threads", thread_count, "worker threads (0: all cores)");

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (reports go to stdout when omitted)");
        sub->add_option("--threads", thread_count, "worker threads (0: all cores)");
        sub->add_option("--seed", seed, "random seed overriding the config");
        sub->add_option("--set", overrides, "override a config key (key=value)");
    };

    CLI::App* dec = app.add_subcommand("decompose", "build and certify the packet frame");
    common(dec);
    CLI::App* des = app.add_subcommand("design", "solve the relaxed sensor design problem");
    common(des);
    des->add_option("--stability", stability, "comma separated N list for the stabilization table");
    CLI::App* obs = app.add_subcommand("observe", "observability constants and sandwich check");
    common(obs);
    obs->add_option("--mask", mask_path, "HPGRID mask, e.g. from design")->check(CLI::ExistingFile);
    CLI::App* val = app.add_subcommand("validate", "run the invariant suites");
    common(val);
    val->add_option("--suite", suites, "suite name (repeatable)");
    CLI::App* ker = app.add_subcommand("kernel", "dump free kernel and Kac bound tables");
    common(ker);
    ker->add_option("--times", times, "comma separated times");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_threads(thread_count);
        ExperimentConfig cfg = load_config(config_path);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos)
                fail(ErrorKind::ConfigError, "--set expects key=value");
            set_config_value(cfg, o.substr(0, eq), o.substr(eq + 1));
        }
        if (seed != 0)
            cfg.seed = seed;

        CommandOptions opt;
        opt.out_dir = out_dir;
        opt.mask_path = mask_path;
        opt.suites = suites;
        if (!stability.empty())
            opt.stability = parse_int_list(stability);

        CommandResult r;
        std::string name;
        if (*dec) {
            name = "decompose";
            r = cmd_decompose(cfg, opt);
        } else if (*des) {
            name = "design";
            r = cmd_design(cfg, opt);
        } else if (*obs) {
            name = "observe";
            r = cmd_observe(cfg, opt);
        } else if (*val) {
            name = "validate";
            r = cmd_validate(cfg, opt);
        } else {
            name = "kernel";
            std::vector<double> ts;
            for (const auto& s : CLI::detail::split(times, ','))
                if (!s.empty())
                    ts.push_back(std::stod(s));
            r = cmd_kernel(cfg, opt, ts);
        }
        emit(r, out_dir, name);
        return r.exit_code;
    } catch (const Error& e) {
        std::cerr << "heatpack: " << kind_name(e.kind()) << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "heatpack: " << e.what() << "\n";
        return 2;
    }
}
