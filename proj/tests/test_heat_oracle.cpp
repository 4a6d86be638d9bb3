#include "heatpack/heat_oracle.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace heatpack;
using testing_support::interval;
using testing_support::square;

namespace {

BumpSpec default_bump()
{
    BumpSpec b;
    b.dim = 1;
    b.epsilon0 = 0.1;
    b.delta = 0.5;
    return b;
}

RealField first_mode(const BoxDomain& omega, int n)
{
    RealField g(omega, uniform_resolution(omega.dim, n));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.center(i);
        double v = 1.0;
        for (int k = 0; k < omega.dim; ++k)
            v *= std::sin(M_PI * (x[k] - omega.lo[k]) / omega.extent(k));
        g[i] = v;
    }
    return g;
}

template <class F>
ErrorKind kind_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::IoError; // sentinel: nothing thrown
}

} // namespace

TEST_CASE("free kernel values")
{
    CHECK(free_kernel(1, 0.25, {0.0, 0.0}, {1.0, 0.0}) == doctest::Approx(std::exp(-1.0) / std::sqrt(M_PI)).epsilon(1e-14));
    CHECK(free_kernel(1, 0.25, {0.0, 0.0}, {1.0, 0.0}) == doctest::Approx(0.207554).epsilon(1e-6));
    for (int d : {1, 2})
        CHECK(free_kernel(d, 0.3, {0.1, 0.2}, {0.1, 0.2}) ==
              doctest::Approx(std::pow(4.0 * M_PI * 0.3, -0.5 * d)).epsilon(1e-14));
    CHECK(kind_of([] { free_kernel(1, 0.0, {}, {}); }) == ErrorKind::NonpositiveTime);
}

TEST_CASE("free kernel has unit mass")
{
    const double t = 0.01;
    double s = 0.0;
    const int n = 4000;
    const double h = 2.0 / n;
    for (int i = 0; i < n; ++i)
        s += free_kernel(1, t, {-1.0 + (i + 0.5) * h, 0.0}, {0.05, 0.0}) * h;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Kac bound branches")
{
    const BoxDomain omega = interval(0.0, 1.0);
    const Point y{0.3, 0.0};
    const double dist = 0.3, t0 = dist * dist / 2.0;
    const double t = 0.5 * t0;
    CHECK(kac_bound(t, y, omega) ==
          doctest::Approx(std::pow(4.0 * M_PI * t, -0.5) * std::exp(-dist * dist / (4.0 * t))).epsilon(1e-14));
    CHECK(kac_bound(3.0 * t0, y, omega) ==
          doctest::Approx(std::pow(4.0 * M_PI * t0, -0.5) * std::exp(-0.5)).epsilon(1e-14));
    // the two expressions agree at t0
    CHECK(kac_bound(t0 * (1.0 - 1e-12), y, omega) == doctest::Approx(kac_bound(t0 * (1.0 + 1e-12), y, omega)).epsilon(1e-9));

    // 2-D distance is to the nearest face
    const BoxDomain sq = square(-1.0, 1.0);
    const Point z{0.5, -0.2};
    const double d2 = 0.5, t02 = d2 * d2 / 4.0;
    CHECK(kac_bound(0.5 * t02, z, sq) ==
          doctest::Approx(std::pow(4.0 * M_PI * 0.5 * t02, -1.0) * std::exp(-d2 * d2 / (2.0 * t02))).epsilon(1e-14));
}

TEST_CASE("Kac bound decays deep inside the domain")
{
    double prev = 1e300;
    for (double L : {1.0, 2.0, 4.0, 8.0}) {
        const double b = kac_bound(0.01, {0.0, 0.0}, interval(-L, L));
        CHECK(b < prev);
        prev = b;
    }
    CHECK(prev < 1e-300);
    CHECK(kind_of([] { kac_bound(0.1, {2.0, 0.0}, interval(0.0, 1.0)); }) == ErrorKind::PointOutsideDomain);
}

TEST_CASE("fd_solve of zero data stays zero")
{
    const RealField g(interval(0.0, 1.0), uniform_resolution(1, 64));
    FdOptions o;
    o.snapshot_times = {0.05, 0.1};
    const FdSolution s = fd_solve(g, 0.1, o);
    for (const auto& snap : s.snapshots)
        for (const auto& v : snap.values)
            CHECK(v == cplx(0.0));
    CHECK(s.steps >= 64);
    CHECK(s.dt <= 0.5 * std::pow(1.0 / 64, 2) + 1e-18);
    const EnergyReport e = energy_check(s);
    CHECK(e.initial == 0.0);
    CHECK(e.pass);
}

TEST_CASE("first Dirichlet mode decays at the first eigenvalue")
{
    for (int dim : {1, 2}) {
        const BoxDomain omega = dim == 1 ? interval(0.0, 1.0) : square(0.0, 1.0);
        const int n = dim == 1 ? 256 : 64;
        const RealField g = first_mode(omega, n);
        FdOptions o;
        o.snapshot_times = {0.1};
        o.boundary_tol = 0.1;
        const double T = 0.1;
        const FdSolution s = fd_solve(g, T, o);
        const double decay = std::exp(-dim * M_PI * M_PI * T);
        double err = 0.0, top = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(s.snapshots[0][i].real() - decay * g[i]));
            top = std::max(top, decay * g[i]);
        }
        CHECK(err / top <= 1e-3);
        CHECK(s.norm2.back() <= s.norm2.front());
    }
}

TEST_CASE("sampled eigenmodes violate the default boundary threshold")
{
    const RealField g = first_mode(interval(0.0, 1.0), 64);
    CHECK(kind_of([&] { fd_solve(g, 0.1); }) == ErrorKind::BoundaryViolation);
    const RealField zero(interval(0.0, 1.0), uniform_resolution(1, 64));
    CHECK(kind_of([&] { fd_solve(zero, 0.0); }) == ErrorKind::NonpositiveTime);
}

TEST_CASE("energy identity and strict decay for the bump")
{
    const BumpSpec b = default_bump();
    const BoxDomain omega = interval(-0.6, 0.6);
    const RealField g = sample(b, omega, uniform_resolution(1, 256));
    const FdSolution s = fd_solve(g, 0.03);
    const EnergyReport e = energy_check(s, 1e-4);
    CHECK(e.pass);
    CHECK(e.residual < 1e-10);
    CHECK(e.strictly_decreasing);
    CHECK(e.monotone);
    // the plain trapezoid of ||D u^k||^2 is only a diagnostic
    CHECK(e.naive_residual > e.residual);
}

TEST_CASE("masked norm integral is bounded by the full one")
{
    const BoxDomain omega = interval(-0.6, 0.6);
    const RealField g = sample(default_bump(), omega, uniform_resolution(1, 128));
    RealField half(omega, uniform_resolution(1, 128)), full(omega, uniform_resolution(1, 128), 1.0);
    for (std::size_t i = 0; i < half.size(); ++i)
        half[i] = half.center(i)[0] < 0.0 ? 1.0 : 0.0;
    FdOptions a, b;
    a.mask = &half;
    b.mask = &full;
    const double oh = observed_integral(fd_solve(g, 0.02, a));
    const FdSolution sf = fd_solve(g, 0.02, b);
    const double of = observed_integral(sf);
    CHECK(oh == doctest::Approx(0.5 * of).epsilon(1e-10)); // symmetric bump
    double trap = 0.0;
    for (int k = 0; k < sf.steps; ++k)
        trap += 0.5 * sf.dt * (sf.norm2[static_cast<std::size_t>(k)] + sf.norm2[static_cast<std::size_t>(k) + 1]);
    CHECK(of == doctest::Approx(trap).epsilon(1e-12));
}

TEST_CASE("whole space and domain evolutions agree at tiny T")
{
    const WholeVsDomainReport r =
        whole_vs_domain_check(default_bump(), interval(-0.6, 0.6), uniform_resolution(1, 256), 1e-9, 0.1);
    CHECK(r.measured < 1e-6);
    CHECK(r.pass);
    CHECK(r.bound == doctest::Approx(0.05 * bump_norms(1).c0).epsilon(1e-12));
}

TEST_CASE("shrinking delta past the horizon is a precondition violation")
{
    BumpSpec b = default_bump();
    const double T = 0.5 * 0.1 * std::pow(0.5, 4);
    CHECK_NOTHROW(whole_vs_domain_check(b, interval(-0.6, 0.6), uniform_resolution(1, 64), T, 0.1));
    b.delta = 0.35;
    CHECK(kind_of([&] { whole_vs_domain_check(b, interval(-0.6, 0.6), uniform_resolution(1, 64), T, 0.1); }) ==
          ErrorKind::PreconditionViolation);
}

TEST_CASE("short-time check at the precondition boundary")
{
    const BumpSpec b = default_bump();
    const double eta0 = 0.1;
    const double limit = short_time_limit(b, eta0);
    const BumpNorms& nm = bump_norms(1);
    CHECK(nm.s == 1);
    CHECK(limit == doctest::Approx(eta0 * std::pow(0.1, 3.0) / nm.c2s).epsilon(1e-12));
    CHECK(short_time_check(b, interval(-0.6, 0.6), uniform_resolution(1, 256), eta0, 0.0).measured == 0.0);
    const ShortTimeReport r = short_time_check(b, interval(-0.6, 0.6), uniform_resolution(1, 256), eta0, 0.999 * limit);
    CHECK(r.pass);
    CHECK(r.measured <= eta0);
    CHECK(kind_of([&] { short_time_check(b, interval(-0.6, 0.6), uniform_resolution(1, 256), eta0, 2.0 * limit); }) ==
          ErrorKind::PreconditionViolation);
}

TEST_CASE("Kac sandwich on the default grid")
{
    const KacReport k = kac_check(default_bump(), interval(-0.6, 0.6), uniform_resolution(1, 256), 0.03, 1e-4);
    CHECK(k.pass);
    CHECK(k.worst_low >= -1e-4);
    CHECK(k.worst_excess <= 1e-4);
}

TEST_CASE("HPGRID round trip")
{
    RealField f(square(-1.0, 2.0), {3, 5});
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = std::sin(1.0 + 7.0 * i) / 3.0;
    const RealField g = real_from_hpgrid(to_hpgrid(f));
    CHECK(g.res == f.res);
    CHECK(g.domain.lo == f.domain.lo);
    CHECK(g.values == f.values);
    ComplexField c(interval(0.0, 1.0), uniform_resolution(1, 4));
    c[1] = cplx(0.1, -1.0 / 3.0);
    CHECK(complex_from_hpgrid(to_hpgrid(c)).values == c.values);
    CHECK(kind_of([] { real_from_hpgrid("nonsense"); }) == ErrorKind::IoError);
}
