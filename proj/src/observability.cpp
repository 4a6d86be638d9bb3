#include "heatpack/observability.hpp"

#include "heatpack/error.hpp"
#include "heatpack/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace heatpack {

PacketConstant c_rand_packets(const Frame& frame, const ObservationSet& omega, double T, double rel_tol)
{
    const FrameParams& p = frame.params;
    PacketConstant out;
    out.argmin = p.S.front();
    const std::vector<double> g = diagonal_gramian(frame, p.S, omega, T, rel_tol);
    // d_n = 1 / (A(T,n) int_Omega g_T)
    const Resolution res = omega.full_space ? uniform_resolution(p.dim, 256) : omega.mask.res;
    const double WT =
        gauss_mass(space_rule(RealField(omega.domain, res, 1.0), 4), frame.x0, p.sigma, p.dim, T);
    out.value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.S.size(); ++i) {
        const double dn = 1.0 / (attenuation(T, p.xi(p.S[i]), p.sigma, p.dim) * WT);
        const double v = dn * g[i];
        if (v < out.value) {
            out.value = v;
            out.argmin = p.S[i];
        }
    }
    return out;
}

PencilMin c_det_pencil(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& H)
{
    Eigen::LLT<Eigen::MatrixXcd> llt(H);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::PencilDegenerate, "H is not positive definite");
    // R^{-*} G R^{-1} with H = R* R, R = L*.
    const Eigen::MatrixXcd Linv_G = llt.matrixL().solve(G);
    const Eigen::MatrixXcd C = llt.matrixL().solve(Linv_G.adjoint()).adjoint();
    const Eigen::MatrixXcd Ch = 0.5 * (C + C.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Ch);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::PencilDegenerate, "eigensolver failed on the reduced pencil");
    PencilMin out;
    out.eigenvalues = es.eigenvalues();
    out.lambda_raw = es.eigenvalues()(0);
    out.lambda_min = std::max(0.0, out.lambda_raw);
    out.vector = llt.matrixU().solve(es.eigenvectors().col(0));
    return out;
}

PencilMin c_det_pencil(const GramianPencil& pencil) { return c_det_pencil(pencil.G, pencil.H); }

double rayleigh(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& c)
{
    return (c.adjoint() * G * c)(0).real() / (c.adjoint() * H * c)(0).real();
}

double mode_mass(const ObservationSet& omega, const std::vector<int>& j)
{
    const BoxDomain& box = omega.domain;
    const int d = box.dim;
    if (omega.full_space)
        return 1.0;
    const RealField& m = omega.mask;
    // Per-axis cell integrals of (2/l) sin^2(j pi (x - lo)/l).
    std::vector<std::vector<double>> axis(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const double l = box.extent(k), h = m.h(k);
        const double w = j[static_cast<std::size_t>(k)] * M_PI / l;
        for (int i = 0; i < m.res[k]; ++i) {
            const double a = i * h, b = a + h;
            axis[static_cast<std::size_t>(k)].push_back(
                2.0 / l * (0.5 * h - (std::sin(2.0 * w * b) - std::sin(2.0 * w * a)) / (4.0 * w)));
        }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0.0)
            continue;
        const auto idx = m.unflatten(i);
        double v = m[i];
        for (int k = 0; k < d; ++k)
            v *= axis[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[k])];
        acc += v;
    }
    return acc;
}

SpectralConstant c_rand_spectral(const ObservationSet& omega, double T, int J)
{
    if (J < 1)
        fail(ErrorKind::PreconditionViolation, "mode cap must be at least 1");
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "horizon must be positive");
    const BoxDomain& box = omega.domain;
    const int d = box.dim;
    struct Mode {
        double lambda;
        std::vector<int> j;
    };
    std::vector<Mode> modes;
    if (d == 1) {
        for (int a = 1; a <= J; ++a)
            modes.push_back({std::pow(a * M_PI / box.extent(0), 2), {a}});
    } else {
        for (int a = 1; a <= J; ++a)
            for (int b = 1; b <= J; ++b)
                modes.push_back(
                    {std::pow(a * M_PI / box.extent(0), 2) + std::pow(b * M_PI / box.extent(1), 2), {a, b}});
        std::stable_sort(modes.begin(), modes.end(), [](const Mode& x, const Mode& y) { return x.lambda < y.lambda; });
        modes.resize(static_cast<std::size_t>(J));
    }
    SpectralConstant out;
    out.value = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < modes.size(); ++r) {
        const double lam = modes[r].lambda;
        const double v = std::expm1(2.0 * lam * T) / (2.0 * lam) * mode_mass(omega, modes[r].j);
        if (v < out.value) {
            out.value = v;
            out.mode = modes[r].j;
            out.rank = static_cast<int>(r) + 1;
            out.lambda = lam;
        }
    }
    return out;
}

namespace {

// splitmix64: portable and fully specified.
std::uint64_t next_u64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

Eigen::VectorXcd random_signs(std::size_t n, std::uint64_t& state)
{
    Eigen::VectorXcd c(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t r = next_u64(state);
        c(static_cast<Eigen::Index>(i)) = cplx((r & 1u) ? 1.0 : -1.0, (r & 2u) ? 1.0 : -1.0);
    }
    return c / c.norm();
}

SandwichReport sandwich_check(const Frame& frame, const BumpSpec& bump, const ObservationSet& omega, double T,
                              const SandwichOptions& opt)
{
    if (omega.full_space)
        fail(ErrorKind::PreconditionViolation, "sandwich check needs a mask on Omega");
    SandwichReport rep;
    rep.T = T;
    rep.eta = opt.eta;
    rep.seed = opt.seed;
    rep.short_time_limit = short_time_limit(bump, opt.eta0, opt.c_sd);
    rep.short_time_ok = T > 0.0 && T < rep.short_time_limit;
    if (!rep.short_time_ok)
        fail(ErrorKind::PreconditionViolation,
             "sandwich horizon " + format_double(T) + " is outside the short-time regime (limit " +
                 format_double(rep.short_time_limit) + ")",
             {T, rep.short_time_limit});

    const FrameParams& p = frame.params;
    std::vector<HeatPacket> packets;
    for (const auto& n : p.S)
        packets.push_back(packet(frame, n));
    const Eigen::MatrixXcd G = gramian_matrix(packets, omega, T);
    const Eigen::MatrixXcd H = final_gram(packets, omega.domain, omega.mask.res, T);
    try {
        rep.pencil_min = c_det_pencil(G, H).lambda_min;
    } catch (const Error&) {
        rep.pencil_min = std::numeric_limits<double>::quiet_NaN();
    }

    // Initial packet values on the grid, one column per packet.
    const RealField& mask = omega.mask;
    const std::size_t P = packets.size(), Gc = mask.size();
    Eigen::MatrixXcd phi0(static_cast<Eigen::Index>(Gc), static_cast<Eigen::Index>(P));
    parallel_for(Gc, [&](std::size_t i) {
        const Point x = mask.center(i);
        for (std::size_t a = 0; a < P; ++a)
            phi0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = packet_value(packets[a], 0.0, x);
    });

    std::uint64_t state = opt.seed;
    FdOptions fo;
    fo.mask = &mask;
    fo.snapshot_times = {T};
    rep.min_packet = rep.min_fd = rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = 0.0;
    rep.pass = true;
    for (int t = 0; t < opt.trials; ++t) {
        Eigen::VectorXcd c;
        if (t == 0 && opt.unit_first_trial) {
            c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(P));
            c(0) = 1.0;
        } else {
            c = random_signs(P, state);
        }
        SandwichTrial tr;
        tr.packet_quotient = rayleigh(G, H, c);
        ComplexField u0(mask.domain, mask.res);
        const Eigen::VectorXcd v = phi0 * c;
        for (std::size_t i = 0; i < Gc; ++i)
            u0[i] = v(static_cast<Eigen::Index>(i));
        const FdSolution sol = fd_solve(u0, T, fo);
        tr.fd_quotient = observed_integral(sol) / sol.norm2.back();
        tr.ratio = tr.packet_quotient / tr.fd_quotient;
        tr.pass = tr.ratio >= 0.5 * opt.eta && tr.ratio <= 2.0 / opt.eta;
        rep.min_packet = std::min(rep.min_packet, tr.packet_quotient);
        rep.min_fd = std::min(rep.min_fd, tr.fd_quotient);
        rep.min_ratio = std::min(rep.min_ratio, tr.ratio);
        rep.max_ratio = std::max(rep.max_ratio, tr.ratio);
        rep.trials.push_back(tr);
        if (!tr.pass) {
            rep.pass = false;
            if (opt.throw_on_violation)
                fail(ErrorKind::SandwichViolation,
                     "trial " + std::to_string(t) + ": quotient ratio " + format_double(tr.ratio) +
                         " outside [eta/2, 2/eta]",
                     {static_cast<double>(t), tr.packet_quotient, tr.fd_quotient});
        }
    }
    return rep;
}

} // namespace heatpack
