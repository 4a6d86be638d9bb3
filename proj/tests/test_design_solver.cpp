#include "heatpack/design_solver.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace heatpack;
using testing_support::interval;

namespace {

RealField field(int cells, const std::function<double(int)>& f)
{
    RealField r(interval(0.0, 1.0), uniform_resolution(1, cells));
    for (int i = 0; i < cells; ++i)
        r[static_cast<std::size_t>(i)] = f(i);
    return r;
}

std::vector<RealField> random_densities(std::mt19937& rng, int cells, int P)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<RealField> rho;
    for (int p = 0; p < P; ++p)
        rho.push_back(field(cells, [&](int) { return u(rng); }));
    return rho;
}

std::size_t count_fractional(const RealField& a)
{
    std::size_t n = 0;
    for (double v : a.values)
        n += v > 1e-12 && v < 1.0 - 1e-12;
    return n;
}

const Frame& packets_frame() { return testing_support::shipped_frame("packets_1d.conf"); }

} // namespace

TEST_CASE("bathtub fills the largest values first")
{
    const RealField phi = field(64, [](int i) { return 10.0 - 0.1 * i; });
    const Bathtub b = bathtub_max(phi, 0.25);
    for (int i = 0; i < 64; ++i)
        CHECK(b.a[static_cast<std::size_t>(i)] == (i < 16 ? 1.0 : 0.0));
    CHECK(!b.degenerate);
    CHECK(b.lambda == doctest::Approx(phi[b.marginal]));
    CHECK(b.value == doctest::Approx(inner(b.a, phi)).epsilon(1e-14));
}

TEST_CASE("bathtub on a constant field is the first fill and degenerate")
{
    const RealField phi = field(40, [](int) { return 2.0; });
    const Bathtub b = bathtub_max(phi, 0.3);
    for (int i = 0; i < 40; ++i)
        CHECK(b.a[static_cast<std::size_t>(i)] == (i < 12 ? 1.0 : 0.0));
    CHECK(b.degenerate);
    CHECK(b.ties == 40);
}

TEST_CASE("bathtub matches enumeration over masks with one fractional cell")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const RealField phi = field(16, [&](int) { return u(rng); });
        const double M = trial == 0 ? 0.5 : 0.05 + 0.9 * u(rng);
        const Bathtub b = bathtub_max(phi, M);
        CHECK(b.value == doctest::Approx(oracle::best_one_fractional(phi, M)).epsilon(1e-12));
        CHECK(count_fractional(b.a) <= 1);
        CHECK(integrate(b.a) == doctest::Approx(M).epsilon(1e-12));
    }
}

TEST_CASE("bathtub rejects an infeasible budget")
{
    const RealField phi = field(8, [](int i) { return i; });
    try {
        bathtub_max(phi, 1.2);
        FAIL("expected InfeasibleMeasure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InfeasibleMeasure);
    }
    const Bathtub full = bathtub_max(phi, 1.0);
    for (double v : full.a.values)
        CHECK(v == 1.0);
}

TEST_CASE("J of a")
{
    std::mt19937 rng(3);
    const auto rho = random_densities(rng, 8, 2);
    const RealField flat = field(8, [](int) { return 0.4; });
    const JValue j = J_of_a(flat, rho);
    CHECK(j.value == doctest::Approx(0.4 * std::min(integrate(rho[0]), integrate(rho[1]))).epsilon(1e-14));

    // brute force over 0/1 masks on 8 cells
    for (unsigned m = 0; m < 256; ++m) {
        const RealField a = field(8, [&](int i) { return static_cast<double>(m >> i & 1u); });
        std::vector<double> av(a.values);
        CHECK(J_of_a(a, rho).value == doctest::Approx(oracle::min_value(av, rho)).epsilon(1e-14));
    }
    CHECK(J_of_a(flat, {rho[1]}).value == doctest::Approx(inner(flat, rho[1])).epsilon(1e-14));
    // ties resolve to the first index
    CHECK(J_of_a(flat, {rho[0], rho[0]}).argmin == 0);
}

TEST_CASE("saddle value equals the LP optimum on small instances")
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SaddleOptions o;
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const int cells = 4 + trial % 13;
        const int P = 1 + trial % 3;
        const auto rho = random_densities(rng, cells, P);
        const double M = 0.05 + 0.9 * u(rng);
        const DesignSolution s = saddle_solve_densities(rho, M, o);
        const double want = oracle::lp_design_optimum(rho, M);
        worst = std::max(worst, std::abs(s.value - want));
        CHECK(s.gap <= 1e-6);
        CHECK(s.value <= s.upper + 1e-15);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("three densities on 16 cells")
{
    std::mt19937 rng(17);
    const auto rho = random_densities(rng, 16, 3);
    const DesignSolution s = saddle_solve_densities(rho, 0.5);
    CHECK(s.value == doctest::Approx(oracle::lp_design_optimum(rho, 0.5)).epsilon(1e-6));
    CHECK(s.gap <= 1e-6);
}

TEST_CASE("single density is solved by one bathtub")
{
    std::mt19937 rng(2);
    const auto rho = random_densities(rng, 32, 1);
    const DesignSolution s = saddle_solve_densities(rho, 0.4);
    CHECK(s.gap == 0.0);
    CHECK(s.iterations == 1);
    CHECK(s.value == doctest::Approx(bathtub_max(rho[0], 0.4).value).epsilon(1e-14));
}

TEST_CASE("mirror-symmetric densities")
{
    const RealField r0 = field(32, [](int i) { return std::exp(-std::pow((i - 8.0) / 5.0, 2)); });
    const RealField r1 = field(32, [](int i) { return std::exp(-std::pow((23.0 - i) / 5.0, 2)); });
    const DesignSolution a = saddle_solve_densities({r0, r1}, 0.3);
    const DesignSolution b = saddle_solve_densities({r1, r0}, 0.3);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    CHECK(std::abs(a.alpha[0] - a.alpha[1]) <= 1e-6);
    CHECK(a.gap <= 1e-6);
}

TEST_CASE("saddle value is nondecreasing in M")
{
    std::mt19937 rng(23);
    const auto rho = random_densities(rng, 24, 3);
    double prev = -1.0;
    for (double M : {0.1, 0.25, 0.5, 0.75, 1.0}) {
        const DesignSolution s = saddle_solve_densities(rho, M);
        CHECK(s.value >= prev - 1e-12);
        prev = s.value;
    }
    double all = 1e300;
    for (const auto& r : rho)
        all = std::min(all, integrate(r));
    CHECK(prev == doctest::Approx(all).epsilon(1e-12));
}

TEST_CASE("packet energy densities")
{
    const Frame& f = packets_frame();
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const double T = 0.03, s2 = f.params.sigma * f.params.sigma;
    const auto dens = energy_densities(f, pencil_indices(f.params, 5), T, config_domain(c), config_resolution(c));
    for (const auto& d : dens) {
        for (double v : d.rho.values)
            CHECK(v > 0.0);
        const Point xi = f.params.xi(d.n);
        const double xi2 = norm2(xi, 1);
        const double mass =
            oracle::graded_gauss([&](double t) { return std::sqrt(s2 / (s2 + t)) * std::exp(-2.0 * t * s2 * xi2 / (s2 + t)); },
                                 0.0, T);
        CHECK(integrate(d.rho) == doctest::Approx(d.d_n * mass).epsilon(1e-6));
        if (d.n[0] == 0)
            CHECK(d.d_n == doctest::Approx(std::sqrt((s2 + T) / s2)).epsilon(1e-8));
    }
}

TEST_CASE("level-set check")
{
    const RealField flat = field(64, [](int) { return 1.0; });
    const LevelSetReport c = h1_levelset_check({1.0}, {flat});
    CHECK(c.degenerate);
    CHECK(!c.pass);

    double prev = 0.0;
    for (int n : {64, 128, 256}) {
        const RealField g = field(n, [&](int i) {
            const double x = (i + 0.5) / n - 0.4;
            return std::exp(-x * x / 0.02);
        });
        const LevelSetReport r = h1_levelset_check({1.0}, {g});
        CHECK(r.pass);
        CHECK(!r.degenerate);
        if (prev > 0.0) {
            CHECK(prev / r.min_flagged > 1.5); // flagged measure scales with h
            CHECK(prev / r.min_flagged < 2.5);
        }
        prev = r.min_flagged;
    }
}

TEST_CASE("saddle on packet densities has at most one fractional cell")
{
    const Frame& f = packets_frame();
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const DesignSolution s = saddle_solve(f, 0.3, 0.03, 4, config_domain(c), config_resolution(c));
    CHECK(s.gap <= 1e-6);
    CHECK(s.fractional_cells <= 1);
    CHECK(count_fractional(s.a) == s.fractional_cells);
    CHECK(integrate(s.a) == doctest::Approx(0.3 * config_domain(c).volume()).epsilon(1e-12));
}

TEST_CASE("single-element N list is trivially stable")
{
    const Frame& f = packets_frame();
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const StabilityReport r = stability_study(f, 0.3, 0.03, {4}, config_domain(c), config_resolution(c));
    CHECK(r.stabilized);
    CHECK(r.symdiff.empty());
    try {
        stability_study(f, 0.3, 0.03, {8, 4}, config_domain(c), config_resolution(c));
        FAIL("expected PreconditionViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PreconditionViolation);
    }
}

TEST_CASE("mask comparison helpers")
{
    const RealField a = field(10, [](int i) { return i < 4 ? 1.0 : 0.0; });
    const RealField b = field(10, [](int i) { return i < 5 ? 1.0 : (i == 5 ? 0.5 : 0.0); });
    CHECK(symmetric_difference(a, a) == 0.0);
    CHECK(symmetric_difference(a, b) == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(!agree_on_nonfractional(a, b));
    CHECK(agree_on_nonfractional(b, b));
    CHECK(hausdorff_full_cells(a, b) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("top-frequency quotient exceeds gamma1 on the default config")
{
    const ExperimentConfig c = testing_support::config("default_1d.conf");
    const GammaReport g = h2_gamma_check(testing_support::shipped_frame("default_1d.conf"), config_observation(c), c.T);
    CHECK(g.pass);
    CHECK(g.ratio > 1.0);
    CHECK(g.first_xi == 0.0);
    CHECK(g.u1 > 0.0);
    CHECK(g.u2 > 0.0);
}
