#include "heatpack/design_solver.hpp"
#include "heatpack/observability.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace heatpack;
using testing_support::interval;
using testing_support::square;

namespace {

Eigen::MatrixXcd random_spd(int n, unsigned seed)
{
    std::srand(seed);
    const Eigen::MatrixXcd A = Eigen::MatrixXcd::Random(n, n);
    return A * A.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(n, n);
}

} // namespace

TEST_CASE("pencil examples")
{
    const Eigen::MatrixXcd H = random_spd(5, 1);
    CHECK(c_det_pencil(H, H).lambda_min == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(3, 3), D = Eigen::MatrixXcd::Zero(3, 3);
    G.diagonal() << 2.0, 0.6, 5.0;
    D.diagonal() << 1.0, 0.4, 2.0;
    CHECK(c_det_pencil(G, D).lambda_min == doctest::Approx(1.5).epsilon(1e-14));

    Eigen::MatrixXcd G2(2, 2);
    G2 << 2.0, 1.0, 1.0, 2.0;
    const PencilMin pm = c_det_pencil(G2, Eigen::MatrixXcd::Identity(2, 2));
    CHECK(pm.lambda_min == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pm.eigenvalues(1) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("pencil minimum is below every Rayleigh quotient and attained")
{
    const Eigen::MatrixXcd H = random_spd(8, 2);
    const Eigen::MatrixXcd G = random_spd(8, 3);
    const PencilMin pm = c_det_pencil(G, H);
    std::uint64_t state = 9;
    for (int i = 0; i < 200; ++i)
        CHECK(pm.lambda_min <= rayleigh(G, H, random_signs(8, state)) + 1e-14);
    CHECK(std::abs(rayleigh(G, H, pm.vector) - pm.lambda_raw) <= 1e-10 * pm.lambda_raw);
    CHECK((G * pm.vector - pm.lambda_raw * H * pm.vector).norm() <= 1e-10 * G.norm());
}

TEST_CASE("indefinite H is degenerate")
{
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(2, 2);
    H(1, 1) = -1.0;
    try {
        c_det_pencil(H, H);
        FAIL("expected PencilDegenerate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PencilDegenerate);
    }
}

TEST_CASE("random signs are unit vectors with +-1 parts")
{
    std::uint64_t s = 1;
    const std::uint64_t s0 = s;
    const Eigen::VectorXcd v = random_signs(6, s);
    CHECK(s != s0);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        CHECK(std::abs(std::abs(v(i).real()) - 1.0 / std::sqrt(12.0)) < 1e-15);
        CHECK(std::abs(std::abs(v(i).imag()) - 1.0 / std::sqrt(12.0)) < 1e-15);
    }
    std::uint64_t a = 42, b = 42;
    CHECK(random_signs(10, a) == random_signs(10, b));
}

TEST_CASE("spectral constant on the whole box is attained at the first mode")
{
    const BoxDomain omega = interval(0.0, 1.0);
    const SpectralConstant s = c_rand_spectral(whole_domain(omega, uniform_resolution(1, 64)), 0.05, 32);
    CHECK(s.rank == 1);
    const double lam = M_PI * M_PI;
    CHECK(s.value == doctest::Approx(std::expm1(2.0 * lam * 0.05) / (2.0 * lam)).epsilon(1e-12));

    const SpectralConstant s2 = c_rand_spectral(whole_domain(square(0.0, 1.0), uniform_resolution(2, 16)), 0.05, 16);
    CHECK(s2.rank == 1);
    CHECK(s2.lambda == doctest::Approx(2.0 * lam).epsilon(1e-14));
}

TEST_CASE("mode mass on the left half")
{
    const ObservationSet half = box_observation(interval(0.0, 1.0), uniform_resolution(1, 64), {0.0, 0.0}, {0.5, 0.0});
    for (int j = 1; j <= 12; ++j) {
        // 1/2 for even j by symmetry, and for odd j since sin(j pi) = 0
        CHECK(mode_mass(half, {j}) == doctest::Approx(0.5).epsilon(1e-13));
    }
    const ObservationSet third = box_observation(interval(0.0, 1.0), uniform_resolution(1, 3), {0.0, 0.0}, {1.0 / 3.0, 0.0});
    const double x = 1.0 / 3.0;
    for (int j = 1; j <= 5; ++j)
        CHECK(mode_mass(third, {j}) == doctest::Approx(x - std::sin(2.0 * j * M_PI * x) / (2.0 * j * M_PI)).epsilon(1e-13));
}

TEST_CASE("doubling the mode cap keeps an interior minimum")
{
    const ObservationSet w = ball_observation(interval(-0.6, 0.6), uniform_resolution(1, 256), {0.0, 0.0}, 0.18);
    const SpectralConstant a = c_rand_spectral(w, 0.03, 64), b = c_rand_spectral(w, 0.03, 128);
    CHECK(a.rank < 64);
    CHECK(a.value == b.value);
}

TEST_CASE("empty mask gives zero constants")
{
    const Frame& f = testing_support::shipped_frame("packets_1d.conf");
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const ObservationSet empty = observation_from_mask(RealField(config_domain(c), config_resolution(c)));
    CHECK(c_rand_packets(f, empty, 0.03).value == 0.0);
    CHECK(c_rand_spectral(empty, 0.03, 16).value == 0.0);
}

TEST_CASE("randomized packet constant: closed form on the whole space and monotone in the mask")
{
    const Frame& f = testing_support::shipped_frame("packets_1d.conf");
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const double T = 0.03, s2 = f.params.sigma * f.params.sigma;
    // Omega contains the packets, so d_n G_nn = int_0^T A(t)/A(T) (s2+T)^{1/2}/(s2+t)^{1/2} dt
    const PacketConstant all = c_rand_packets(f, whole_domain(config_domain(c), config_resolution(c)), T);
    double want = 1e300;
    for (const auto& n : f.params.S) {
        const double xi2 = norm2(f.params.xi(n), 1);
        auto A = [&](double t) { return std::exp(-2.0 * t * s2 * xi2 / (s2 + t)); };
        double acc = 0.0;
        const int K = 2000;
        for (int k = 0; k < K; ++k) {
            const double t = (k + 0.5) * T / K;
            acc += std::sqrt((s2 + T) / (s2 + t)) * A(t) / A(T) * T / K;
        }
        want = std::min(want, acc);
    }
    CHECK(all.value == doctest::Approx(want).epsilon(1e-6));

    double prev = all.value;
    for (double r : {3.0, 1.62, 0.8, 0.3}) {
        const PacketConstant v = c_rand_packets(f, ball_observation(config_domain(c), config_resolution(c), {0.0, 0.0}, r), T);
        CHECK(v.value <= prev * (1.0 + 1e-12));
        CHECK(v.value > 0.0);
        prev = v.value;
    }
}

TEST_CASE("sandwich on the narrow-packet config")
{
    const Frame& f = testing_support::shipped_frame("packets_1d.conf");
    const ExperimentConfig c = testing_support::config("packets_1d.conf");
    const BumpSpec bump = config_bump(c);
    const ObservationSet omega = config_observation(c);
    SandwichOptions o;
    o.trials = 1;
    o.eta = c.eta;
    o.eta0 = 3.0;
    o.unit_first_trial = true;
    const double T = 0.5 * short_time_limit(bump, o.eta0);
    const SandwichReport r = sandwich_check(f, bump, omega, T, o);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.trials[0].packet_quotient > 0.0);
    CHECK(r.trials[0].fd_quotient > 0.0);
    CHECK(r.trials[0].pass);
    CHECK(r.pencil_min > 0.0);
    CHECK(r.min_packet >= r.pencil_min * (1.0 - 1e-6));

    o.trials = 5;
    o.unit_first_trial = false;
    const SandwichReport w = sandwich_check(f, bump, whole_domain(config_domain(c), config_resolution(c)), T, o);
    for (const auto& t : w.trials)
        CHECK(t.packet_quotient >= 0.5 * c.eta * t.fd_quotient);

    try {
        sandwich_check(f, bump, omega, 2.0 * short_time_limit(bump, o.eta0), o);
        FAIL("expected PreconditionViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PreconditionViolation);
    }
}
