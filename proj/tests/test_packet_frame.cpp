#include "heatpack/json_io.hpp"
#include "heatpack/packet_frame.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <set>

using namespace heatpack;
using testing_support::interval;

namespace {

BumpSpec bump1d(double eps0 = 0.1, double delta = 0.5)
{
    BumpSpec b;
    b.dim = 1;
    b.epsilon0 = eps0;
    b.delta = delta;
    return b;
}

Frame small_frame(TruncationMode mode = TruncationMode::Box)
{
    const BumpSpec b = bump1d();
    Frame f;
    f.params = params_for(b, 0.1, std::log(1000.0), mode, 1);
    f.params.S = truncation_set(f.params, b);
    f.x0 = b.center;
    f.c = coefficients(b, f.params);
    return f;
}

double trapezoid(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i)
        s += f(a + i * h);
    return s * h;
}

} // namespace

TEST_CASE("sigma and L for epsilon = 1e-3")
{
    const FrameParams p = params_for(bump1d(), 0.1, std::log(1000.0), TruncationMode::Box, 1);
    const double sigma = std::sqrt(0.1 * 0.5) * std::log(1000.0);
    CHECK(p.sigma == doctest::Approx(sigma).epsilon(1e-14));
    CHECK(p.L == doctest::Approx(sigma * std::log(std::log(1000.0))).epsilon(1e-14));
    // hand values
    CHECK(p.sigma == doctest::Approx(1.5446210375737).epsilon(1e-12));
    CHECK(p.L == doctest::Approx(2.9852037141628).epsilon(1e-12));
}

TEST_CASE("sigma = L = e when loglog(1/epsilon) = 1")
{
    BumpSpec b = bump1d(1.0, 1.0);
    const FrameParams p = params_for(b, 0.1, std::exp(1.0), TruncationMode::Box, 1);
    CHECK(p.sigma == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(p.L == doctest::Approx(p.sigma).epsilon(1e-14));
}

TEST_CASE("quadrupling epsilon0 doubles sigma and L")
{
    const FrameParams a = params_for(bump1d(0.05), 0.1, 7.0, TruncationMode::Box, 1);
    const FrameParams b = params_for(bump1d(0.2), 0.1, 7.0, TruncationMode::Box, 1);
    CHECK(b.sigma == doctest::Approx(2.0 * a.sigma).epsilon(1e-14));
    CHECK(b.L == doctest::Approx(2.0 * a.L).epsilon(1e-14));
}

TEST_CASE("epsilon must be below 1/e")
{
    CHECK_THROWS_AS(params_for(bump1d(), 0.1, 0.9, TruncationMode::Box, 1), Error);
}

TEST_CASE("truncation set sizes")
{
    FrameParams box = params_for(bump1d(), 0.1, std::log(1000.0), TruncationMode::Box, 1);
    CHECK(box.S.empty());
    box.S = truncation_set(box, bump1d());
    CHECK(box.S.size() == 115);
    int top = 0;
    for (const auto& n : box.S)
        top = std::max(top, std::abs(n[0]));
    CHECK(top == 57);
    CHECK(truncation_count(box, bump1d()) == 115);

    FrameParams band = params_for(bump1d(), 0.1, std::log(1000.0), TruncationMode::Band, 1);
    band.S = truncation_set(band, bump1d());
    CHECK(band.S.size() == 84);
    int low = 1000;
    for (const auto& n : band.S)
        low = std::min(low, std::abs(n[0]));
    CHECK(low == 16);
}

TEST_CASE("truncation set is symmetric under negation")
{
    for (int dim : {1, 2}) {
        BumpSpec b = bump1d();
        b.dim = dim;
        for (auto mode : {TruncationMode::Box, TruncationMode::Band}) {
            FrameParams p = params_for(b, 0.1, std::log(50.0), mode, 1);
            p.S = truncation_set(p, b);
            std::set<Lattice> s(p.S.begin(), p.S.end());
            CHECK(s.size() == p.S.size());
            for (const auto& n : p.S)
                CHECK(s.count(negate(n)) == 1);
        }
    }
}

TEST_CASE("empty band signals EmptySet")
{
    FrameParams p = params_for(bump1d(1.0, 1.0), 0.1, std::exp(1.001), TruncationMode::Box, 1);
    p.mode = TruncationMode::Band;
    try {
        truncation_set(p, bump1d(1.0, 1.0));
        FAIL("expected EmptySet");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySet);
    }
}

TEST_CASE("coefficient symmetries for an even real bump")
{
    const Frame f = small_frame();
    std::size_t zero = 0;
    for (std::size_t i = 0; i < f.params.S.size(); ++i)
        if (f.params.S[i][0] == 0)
            zero = i;
    CHECK(f.c[zero].real() > 0.0);
    CHECK(std::abs(f.c[zero].imag()) <= 1e-14 * f.c[zero].real());
    for (std::size_t i = 0; i < f.params.S.size(); ++i) {
        const cplx cm = coefficient(negate(f.params.S[i]), bump1d(), f.params);
        CHECK(std::abs(cm - std::conj(f.c[i])) <= 1e-14 * std::abs(f.c[zero]));
    }
}

TEST_CASE("packet value examples")
{
    HeatPacket p;
    p.dim = 1;
    p.sigma = 1.0;
    p.x0 = {0.3, 0.0};
    const cplx v = packet_value(p, 1.0, p.x0);
    CHECK(v.real() == doctest::Approx(std::sqrt(1.0 / (2.0 * std::sqrt(2.0 * M_PI)))).epsilon(1e-14));
    CHECK(v.real() == doctest::Approx(0.446621920869).epsilon(1e-11));
    CHECK(std::abs(v.imag()) < 1e-15);

    // t = 0 reduces to the initial packet
    p.sigma = 0.7;
    p.xi = {3.0, 0.0};
    for (double x : {-0.4, 0.1, 0.9}) {
        const double r = x - p.x0[0];
        const cplx want = std::pow(2.0 * M_PI * p.sigma * p.sigma, -0.25) *
                          std::exp(cplx(-r * r / (4.0 * p.sigma * p.sigma), p.xi[0] * r));
        CHECK(std::abs(packet_value(p, 0.0, {x, 0.0}) - want) < 1e-14);
    }
}

TEST_CASE("real form of the modulus matches |phi|^2")
{
    HeatPacket p;
    p.dim = 2;
    p.sigma = 0.4;
    p.x0 = {0.1, -0.2};
    p.xi = {2.0, -5.0};
    for (double t : {0.0, 0.01, 0.3})
        for (double x : {-0.5, 0.0, 0.4})
            for (double y : {-0.3, 0.2}) {
                const Point q{x, y};
                const double a = std::norm(packet_value(p, t, q));
                CHECK(packet_modulus2_real_form(p, t, q) == doctest::Approx(a).epsilon(1e-12));
            }
}

TEST_CASE("packets have unit initial norm and the closed-form evolved norm")
{
    HeatPacket p;
    p.dim = 1;
    p.sigma = 0.5;
    p.xi = {4.0, 0.0};
    for (double t : {0.0, 0.05, 0.2}) {
        const double s = p.sigma * p.sigma + t;
        const double m = trapezoid([&](double x) { return std::norm(packet_value(p, t, {x, 0.0})); },
                                   -12.0 * std::sqrt(s), 12.0 * std::sqrt(s), 4000);
        const double s2 = p.sigma * p.sigma;
        const double closed = std::sqrt(s2 / s) * std::exp(-2.0 * t * s2 * 16.0 / s);
        CHECK(m == doctest::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("superpose with a single coefficient equals the packet")
{
    Frame f;
    f.params = params_for(bump1d(), 0.1, std::log(1000.0), TruncationMode::Box, 1);
    f.params.S = {Lattice{3, 0}};
    f.c = {1.0};
    const HeatPacket p = packet(f, f.params.S[0]);
    for (double x : {-0.2, 0.0, 0.35})
        CHECK(std::abs(superpose(f, 0.02, {x, 0.0}) - packet_value(p, 0.02, {x, 0.0})) < 1e-15);
}

TEST_CASE("default 1-D frame meets eta and the decay fit holds")
{
    const ExperimentConfig c = testing_support::config("default_1d.conf");
    const Frame& f = testing_support::shipped_frame("default_1d.conf");
    CHECK(f.measured_error <= 0.1);
    CHECK(f.measured_error > 0.09); // largest epsilon meeting eta
    CHECK(frame_error(f, config_bump(c), config_domain(c), 256) == doctest::Approx(f.measured_error).epsilon(1e-10));
    CHECK(fit_decay(f, 1).violations == 0);
}

TEST_CASE("reconstruction error falls with more modes")
{
    const BumpSpec b = bump1d();
    const BoxDomain omega = interval(-0.6, 0.6);
    double prev = 1e9;
    for (double K : {3.0, 4.0, 5.5}) {
        Frame f;
        f.params = params_for(b, 0.1, std::exp(K), TruncationMode::Box, 1);
        f.params.S = truncation_set(f.params, b);
        f.x0 = b.center;
        f.c = coefficients(b, f.params);
        const double e = frame_error(f, b, omega, 256);
        CHECK(e < prev);
        prev = e;
    }
    CHECK(prev < 0.1);
}

TEST_CASE("the ob1 policy is infeasible")
{
    EpsilonSearch s;
    s.policy = EpsilonPolicy::Ob1;
    s.omega = interval(-0.6, 0.6);
    try {
        build_frame(bump1d(), 0.1, s);
        FAIL("expected NoFeasibleEpsilon");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoFeasibleEpsilon);
    }
}

TEST_CASE("frame JSON round trip is bit exact")
{
    Frame f = small_frame();
    f.measured_error = 0.123456789012345;
    const Frame g = frame_from_json(json::parse(dump_json(frame_to_json(f))));
    CHECK(g.params.sigma == f.params.sigma);
    CHECK(g.params.L == f.params.L);
    CHECK(g.params.log_inv_epsilon == f.params.log_inv_epsilon);
    CHECK(g.measured_error == f.measured_error);
    REQUIRE(g.params.S.size() == f.params.S.size());
    for (std::size_t i = 0; i < f.c.size(); ++i) {
        CHECK(g.params.S[i] == f.params.S[i]);
        CHECK(g.c[i] == f.c[i]);
    }
}

TEST_CASE("bump profile is L2-normalized")
{
    const BumpSpec b = bump1d();
    const double m = trapezoid([&](double x) { return std::pow(b({x, 0.0}), 2); }, -0.1, 0.1, 20000);
    CHECK(m == doctest::Approx(1.0).epsilon(1e-8));
}
