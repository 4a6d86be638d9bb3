#include "heatpack/commands.hpp"
#include "heatpack/gramian.hpp"

#include "doctest.h"
#include "support.hpp"

#include <filesystem>

using namespace heatpack;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("heatpack_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("config parsing")
{
    const ExperimentConfig c = parse_config("# comment\ndim = 1\n  eta = 0.25 \n\nstability = 2,4\n");
    CHECK(c.eta == 0.25);
    CHECK(c.stability == std::vector<int>{2, 4});
    CHECK(c.T == ExperimentConfig{}.T);

    auto kind = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;
    };
    CHECK(kind("no_such_key = 1\n") == ErrorKind::ConfigError);
    CHECK(kind("eta 0.1\n") == ErrorKind::ConfigError);
    CHECK(kind("iters = many\n") == ErrorKind::ConfigError);
    CHECK(kind("mode = diagonal\n") == ErrorKind::ConfigError);
}

TEST_CASE("canonical config text round trips and fixes the hash")
{
    const ExperimentConfig c = testing_support::config("default_2d.conf");
    const ExperimentConfig d = parse_config(config_text(c));
    CHECK(config_text(d) == config_text(c));
    CHECK(config_hash(d) == config_hash(c));
    ExperimentConfig e = c;
    set_config_value(e, "T", "0.031");
    CHECK(config_hash(e) != config_hash(c));
    CHECK(hash_hex(0x0123456789abcdefull) == "0123456789abcdef");
}

TEST_CASE("decompose reports an infeasible epsilon")
{
    ExperimentConfig c = testing_support::config("default_1d.conf");
    c.policy = EpsilonPolicy::Ob1;
    const CommandResult r = cmd_decompose(c, {});
    CHECK(r.exit_code == 2);
    CHECK(r.report["error"]["kind"] == "NoFeasibleEpsilon");
}

TEST_CASE("design writes a mask that observe reads back")
{
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const fs::path out = scratch("design");
    CommandOptions o;
    o.out_dir = out.string();
    const CommandResult d = cmd_design(c, o);
    REQUIRE(d.exit_code == 0);
    CHECK(fs::exists(out / "mask.pgm"));
    CHECK(fs::exists(out / "design.json"));
    const RealField mask = real_from_hpgrid(read_text((out / "mask.hpgrid").string()));
    CHECK(integrate(mask) == doctest::Approx(c.M * config_domain(c).volume()).epsilon(1e-12));
    CHECK(d.report["design"]["gap"].get<double>() <= c.tol);

    CommandOptions oo;
    oo.mask_path = (out / "mask.hpgrid").string();
    const CommandResult ob = cmd_observe(c, oo);
    CHECK(ob.exit_code == 0);
    CHECK(ob.report["mask"]["hash"] == hash_hex(mask_hash(mask)));
    fs::remove_all(out);
}

TEST_CASE("full measure design covers the domain")
{
    ExperimentConfig c = testing_support::config("packets_1d.conf");
    c.M = 1.0;
    const CommandResult d = cmd_design(c, {});
    REQUIRE(d.exit_code == 0);
    CHECK(d.report["design"]["fractional_cells"].get<std::size_t>() == 0);
    CHECK(d.report["design"]["mask_mass"].get<double>() == doctest::Approx(config_domain(c).volume()).epsilon(1e-12));
}

TEST_CASE("validate is deterministic and rejects unknown suites")
{
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    CommandOptions o;
    o.suites = {"pencil", "observability", "saddle"};
    const CommandResult a = cmd_validate(c, o), b = cmd_validate(c, o);
    CHECK(a.exit_code == 0);
    CHECK(dump_json(a.report) == dump_json(b.report));
    CHECK(!a.report.contains("timings"));

    o.suites = {"nope"};
    const CommandResult bad = cmd_validate(c, o);
    CHECK(bad.exit_code == 2);
    CHECK(bad.report["error"]["kind"] == "ConfigError");
}

TEST_CASE("fault injection fails the gramian suite")
{
    ExperimentConfig c = testing_support::config("default_1d.conf");
    c.fault_perturb = 10.0;
    CommandOptions o;
    o.suites = {"gramian"};
    const CommandResult r = cmd_validate(c, o);
    CHECK(r.exit_code == 4);
    CHECK(r.report["suites"][0]["pass"] == false);
}

TEST_CASE("kernel table")
{
    const ExperimentConfig c = testing_support::config("default_1d.conf");
    const fs::path out = scratch("kernel");
    CommandOptions o;
    o.out_dir = out.string();
    const CommandResult r = cmd_kernel(c, o, {0.01, 0.02});
    CHECK(r.exit_code == 0);
    const std::string csv = read_text((out / "kernel.csv").string());
    CHECK(csv.rfind("t,x,free_kernel,kac_bound", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 256);
    CHECK(cmd_kernel(c, {}, {-1.0}).exit_code == 2);
    fs::remove_all(out);
}
