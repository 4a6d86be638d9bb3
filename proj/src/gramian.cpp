#include "heatpack/gramian.hpp"

#include "heatpack/error.hpp"
#include "heatpack/json_io.hpp"
#include "heatpack/parallel.hpp"
#include "heatpack/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>

namespace heatpack {

double attenuation(double t, const Point& xi, double sigma, int dim)
{
    if (t < 0.0)
        fail(ErrorKind::PreconditionViolation, "attenuation needs t >= 0");
    const double s2 = sigma * sigma;
    return std::exp(-2.0 * t * s2 * norm2(xi, dim) / (s2 + t));
}

double erfc_rational(double b)
{
    if (b < 0.0)
        fail(ErrorKind::NegativeArgument, "erfc_rational needs b >= 0", {b});
    constexpr double a1 = 0.278393, a2 = 0.230389, a3 = 0.000972, a4 = 0.078108;
    const double p = 1.0 + b * (a1 + b * (a2 + b * (a3 + b * a4)));
    const double p2 = p * p;
    return 1.0 / (p2 * p2);
}

// ---------------------------------------------------------------------------
// Observation sets

double ObservationSet::measure() const
{
    return full_space ? std::numeric_limits<double>::infinity() : M * domain.volume();
}

ObservationSet observation_from_mask(const RealField& mask)
{
    for (double v : mask.values)
        if (!(v >= 0.0 && v <= 1.0))
            fail(ErrorKind::PreconditionViolation, "mask values must lie in [0, 1]", {v});
    ObservationSet o;
    o.domain = mask.domain;
    o.mask = mask;
    o.M = integrate(mask) / mask.domain.volume();
    return o;
}

ObservationSet full_space_observation(const BoxDomain& omega)
{
    ObservationSet o;
    o.domain = omega;
    o.full_space = true;
    o.M = 1.0;
    return o;
}

ObservationSet whole_domain(const BoxDomain& omega, const Resolution& res)
{
    return observation_from_mask(RealField(omega, res, 1.0));
}

namespace {

// Overlap length of [a, b] and [c, d].
double overlap(double a, double b, double c, double d) { return std::max(0.0, std::min(b, d) - std::max(a, c)); }

// Fraction of the cell [lo, hi] covered by the ball B(center, R).
double cell_ball_fraction(int dim, const Point& lo, const Point& hi, const Point& center, double R, int sub)
{
    if (dim == 1)
        return overlap(lo[0], hi[0], center[0] - R, center[0] + R) / (hi[0] - lo[0]);
    double near = 0.0, far = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double dn = std::max({lo[k] - center[k], 0.0, center[k] - hi[k]});
        const double df = std::max(std::abs(lo[k] - center[k]), std::abs(hi[k] - center[k]));
        near += dn * dn;
        far += df * df;
    }
    if (near >= R * R)
        return 0.0;
    if (far <= R * R)
        return 1.0;
    int in = 0;
    for (int i = 0; i < sub; ++i)
        for (int j = 0; j < sub; ++j) {
            const double x = lo[0] + (i + 0.5) / sub * (hi[0] - lo[0]) - center[0];
            const double y = lo[1] + (j + 0.5) / sub * (hi[1] - lo[1]) - center[1];
            in += x * x + y * y <= R * R;
        }
    return static_cast<double>(in) / (sub * sub);
}

void cell_bounds(const RealField& f, std::size_t i, Point& lo, Point& hi)
{
    const auto idx = f.unflatten(i);
    for (int k = 0; k < f.dim(); ++k) {
        lo[k] = f.domain.lo[k] + idx[k] * f.h(k);
        hi[k] = lo[k] + f.h(k);
    }
}

double ball_volume(int dim, double R) { return dim == 1 ? 2.0 * R : M_PI * R * R; }

} // namespace

ObservationSet ball_observation(const BoxDomain& omega, const Resolution& res, const Point& center, double radius,
                                int sub)
{
    RealField mask(omega, res);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        Point lo{}, hi{};
        cell_bounds(mask, i, lo, hi);
        mask[i] = cell_ball_fraction(omega.dim, lo, hi, center, radius, sub);
    }
    return observation_from_mask(mask);
}

ObservationSet box_observation(const BoxDomain& omega, const Resolution& res, const Point& blo, const Point& bhi)
{
    RealField mask(omega, res);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        Point lo{}, hi{};
        cell_bounds(mask, i, lo, hi);
        double frac = 1.0;
        for (int k = 0; k < omega.dim; ++k)
            frac *= overlap(lo[k], hi[k], blo[k], bhi[k]) / (hi[k] - lo[k]);
        mask[i] = frac;
    }
    return observation_from_mask(mask);
}

std::uint64_t mask_hash(const RealField& mask)
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    mix(&mask.domain.dim, sizeof mask.domain.dim);
    mix(mask.res.data(), sizeof(int) * kMaxDim);
    for (double v : mask.values)
        mix(&v, sizeof v);
    return h;
}

double ball_fraction(const ObservationSet& omega, const Point& x0, double t, double sigma)
{
    if (t < 0.0)
        fail(ErrorKind::PreconditionViolation, "ball_fraction needs t >= 0");
    if (omega.full_space)
        return 1.0;
    const RealField& m = omega.mask;
    const int d = m.dim();
    const double R = 2.0 * std::sqrt(sigma * sigma + t);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0.0)
            continue;
        Point lo{}, hi{};
        cell_bounds(m, i, lo, hi);
        acc += m[i] * cell_ball_fraction(d, lo, hi, x0, R, 8);
    }
    return acc * m.cell_volume() / ball_volume(d, R);
}

SpaceRule space_rule(const RealField& mask, int order)
{
    const GaussRule& g = gauss_legendre(order);
    const int d = mask.dim();
    const double vol = mask.cell_volume();
    SpaceRule r;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] == 0.0)
            continue;
        const Point c = mask.center(i);
        if (d == 1) {
            for (int q = 0; q < order; ++q) {
                r.x.push_back(Point{c[0] + 0.5 * mask.h(0) * g.x[q], 0.0});
                r.w.push_back(mask[i] * vol * 0.5 * g.w[q]);
            }
        } else {
            for (int q = 0; q < order; ++q)
                for (int p = 0; p < order; ++p) {
                    r.x.push_back(Point{c[0] + 0.5 * mask.h(0) * g.x[q], c[1] + 0.5 * mask.h(1) * g.x[p]});
                    r.w.push_back(mask[i] * vol * 0.25 * g.w[q] * g.w[p]);
                }
        }
    }
    return r;
}

double gauss_mass(const SpaceRule& rule, const Point& x0, double sigma, int dim, double t)
{
    const double s2 = sigma * sigma, s = s2 + t;
    double acc = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) {
        double r2 = 0.0;
        for (int k = 0; k < dim; ++k)
            r2 += (rule.x[j][k] - x0[k]) * (rule.x[j][k] - x0[k]);
        acc += rule.w[j] * std::exp(-r2 / (2.0 * s));
    }
    return std::pow(s2 / (2.0 * M_PI * s * s), 0.5 * dim) * acc;
}

// ---------------------------------------------------------------------------
// Gramian entries

namespace {

void check_common_sigma(const std::vector<HeatPacket>& packets)
{
    for (const auto& p : packets)
        if (p.sigma != packets.front().sigma || p.dim != packets.front().dim)
            fail(ErrorKind::PreconditionViolation, "packets must share sigma and dimension");
}

// Closed-form int_{R^d} phi_p(t) conj(phi_q(t)) dx for packets with a common center.
cplx full_space_product(const HeatPacket& p, const HeatPacket& q, double t)
{
    const int d = p.dim;
    const double s2 = p.sigma * p.sigma;
    const double s = s2 + t;
    double dxi2 = 0.0;
    for (int k = 0; k < d; ++k)
        dxi2 += (p.xi[k] - q.xi[k]) * (p.xi[k] - q.xi[k]);
    const double e = -t * s2 / s * (norm2(p.xi, d) + norm2(q.xi, d)) - dxi2 * s2 * s2 / (2.0 * s);
    return std::pow(s2 / s, 0.5 * d) * std::exp(e);
}

using TimeEval = std::function<Eigen::MatrixXcd(double)>;

// Time integral of a Hermitian matrix-valued function on [0, T] with graded
// Simpson refinement; entries below 1e-4 of the largest diagonal are converged
// in absolute terms.
Eigen::MatrixXcd integrate_hermitian(const TimeEval& at, std::size_t P, double T, double rel_tol)
{
    auto upper = [&](const Eigen::MatrixXcd& m) {
        std::vector<double> v;
        v.reserve(P * (P + 1));
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t b = a; b < P; ++b) {
                v.push_back(m(a, b).real());
                v.push_back(m(a, b).imag());
            }
        return v;
    };
    auto eval = [&](const TimeMesh& mesh) {
        std::vector<Eigen::MatrixXcd> vals(mesh.t.size());
        parallel_for(mesh.t.size(), [&](std::size_t i) { vals[i] = at(mesh.t[i]); });
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(P, P);
        for (std::size_t i = 0; i < mesh.t.size(); ++i)
            acc += mesh.w[i] * vals[i];
        return upper(acc);
    };
    const std::vector<double> coarse = eval(graded_simpson(T, 2.0));
    double diag = 0.0;
    {
        std::size_t k = 0;
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t b = a; b < P; ++b, k += 2)
                if (a == b)
                    diag = std::max(diag, std::abs(coarse[k]));
    }
    std::vector<int> groups;
    for (std::size_t k = 0; k < P * (P + 1) / 2; ++k) {
        groups.push_back(static_cast<int>(k));
        groups.push_back(static_cast<int>(k));
    }
    const std::vector<double> v =
        refine_time_integrals(eval, T, rel_tol, 12, groups, std::max(1e-4 * diag, 1e-300));
    Eigen::MatrixXcd G(P, P);
    std::size_t k = 0;
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = a; b < P; ++b, k += 2) {
            G(a, b) = cplx(v[k], v[k + 1]);
            G(b, a) = std::conj(G(a, b));
        }
    return G;
}

// Spatial Gram matrix sum_j w_j phi_a(t, x_j) conj(phi_b(t, x_j)).
Eigen::MatrixXcd spatial_gram(const std::vector<HeatPacket>& packets, const SpaceRule& rule, double t)
{
    const std::size_t P = packets.size(), J = rule.x.size();
    Eigen::MatrixXcd phi(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(P));
    Eigen::VectorXd sw(static_cast<Eigen::Index>(J));
    for (std::size_t j = 0; j < J; ++j)
        sw(static_cast<Eigen::Index>(j)) = std::sqrt(rule.w[j]);
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t j = 0; j < J; ++j)
            phi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) =
                sw(static_cast<Eigen::Index>(j)) * packet_value(packets[a], t, rule.x[j]);
    // (phi^T conj(phi)) has entries sum_j phi_a conj(phi_b)
    return phi.transpose() * phi.conjugate();
}

} // namespace

Eigen::MatrixXcd gramian_matrix(const std::vector<HeatPacket>& packets, const ObservationSet& omega, double T,
                                const GramianOptions& opt)
{
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "Gramian horizon must be positive");
    if (packets.empty())
        fail(ErrorKind::EmptySet, "no packets");
    check_common_sigma(packets);
    const std::size_t P = packets.size();
    if (omega.full_space) {
        for (const auto& p : packets)
            for (int k = 0; k < p.dim; ++k)
                if (p.x0[k] != packets.front().x0[k])
                    fail(ErrorKind::PreconditionViolation, "full-space mode needs a common packet center");
        return integrate_hermitian(
            [&](double t) {
                Eigen::MatrixXcd m(P, P);
                for (std::size_t a = 0; a < P; ++a)
                    for (std::size_t b = 0; b < P; ++b)
                        m(a, b) = full_space_product(packets[a], packets[b], t);
                return m;
            },
            P, T, opt.rel_tol);
    }
    const SpaceRule rule = space_rule(omega.mask, opt.space_order);
    if (rule.x.empty())
        return Eigen::MatrixXcd::Zero(P, P);
    return integrate_hermitian([&](double t) { return spatial_gram(packets, rule, t); }, P, T, opt.rel_tol);
}

cplx gramian_entry(const HeatPacket& p, const HeatPacket& q, const ObservationSet& omega, double T,
                   const GramianOptions& opt)
{
    const Eigen::MatrixXcd G = gramian_matrix({p, q}, omega, T, opt);
    return G(0, 1);
}

Eigen::MatrixXcd final_gram(const std::vector<HeatPacket>& packets, const BoxDomain& omega, const Resolution& res,
                            double T, int space_order)
{
    check_common_sigma(packets);
    const SpaceRule rule = space_rule(RealField(omega, res, 1.0), space_order);
    return spatial_gram(packets, rule, T);
}

// ---------------------------------------------------------------------------
// Pencil

std::vector<Lattice> pencil_indices(const FrameParams& params, std::size_t count)
{
    // S is stored in (|n|^2, lexicographic) order.
    const std::size_t n = std::min(count, params.S.size());
    return std::vector<Lattice>(params.S.begin(), params.S.begin() + static_cast<std::ptrdiff_t>(n));
}

GramianPencil assemble_pencil(const Frame& frame, const std::vector<Lattice>& indices, const ObservationSet& omega,
                              const Resolution& res, double T, const GramianOptions& opt, double cond_limit)
{
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "pencil horizon must be positive");
    if (indices.empty())
        fail(ErrorKind::EmptySet, "empty pencil index list");
    std::vector<HeatPacket> packets;
    for (const auto& n : indices)
        packets.push_back(packet(frame, n));
    GramianPencil pen;
    pen.dim = frame.params.dim;
    pen.indices = indices;
    pen.T = T;
    pen.mask_hash = omega.full_space ? 0 : mask_hash(omega.mask);
    pen.G = gramian_matrix(packets, omega, T, opt);
    pen.H = final_gram(packets, omega.domain, res, T, opt.space_order);
    pen.G = 0.5 * (pen.G + pen.G.adjoint()).eval();
    pen.H = 0.5 * (pen.H + pen.H.adjoint()).eval();
    Eigen::LLT<Eigen::MatrixXcd> llt(pen.H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pen.H, Eigen::EigenvaluesOnly);
    pen.h_min_eig = es.eigenvalues().minCoeff();
    pen.h_max_eig = es.eigenvalues().maxCoeff();
    if (llt.info() != Eigen::Success || !(pen.h_min_eig > pen.h_max_eig / cond_limit))
        fail(ErrorKind::PencilDegenerate,
             "H is not numerically positive definite (eigenvalues " + format_double(pen.h_min_eig) + " .. " +
                 format_double(pen.h_max_eig) + "); shrink S or T",
             {pen.h_min_eig, pen.h_max_eig});
    return pen;
}

void write_pencil(const GramianPencil& pencil, const std::string& dir)
{
    std::filesystem::create_directories(dir);
    auto csv = [](const Eigen::MatrixXcd& m) {
        std::string out;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (j)
                    out += ',';
                out += format_double(m(i, j).real());
                out += ',';
                out += format_double(m(i, j).imag());
            }
            out += '\n';
        }
        return out;
    };
    write_text(dir + "/G.csv", csv(pencil.G));
    write_text(dir + "/H.csv", csv(pencil.H));
    json j;
    json idx = json::array();
    for (const auto& n : pencil.indices)
        idx.push_back(to_json(n, pencil.dim));
    j["indices"] = std::move(idx);
    j["T"] = pencil.T;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(pencil.mask_hash));
    j["mask_hash"] = buf;
    j["csv_layout"] = "row-major, each entry as re,im";
    j["h_min_eig"] = pencil.h_min_eig;
    j["h_max_eig"] = pencil.h_max_eig;
    write_text(dir + "/pencil.json", dump_json(j));
}

// ---------------------------------------------------------------------------
// Bounds

double gramian_constant(int dim)
{
    if (dim == 1)
        return 4.0 * M_E * (std::sqrt(1.5) - 1.0);
    if (dim == 2)
        return 2.0 * M_E * std::log(1.5);
    fail(ErrorKind::ConfigError, "dimension must be 1 or 2");
}

double calibrate_gramian_constant(int dim, double sigma, const std::vector<Point>& xis)
{
    const double s2 = sigma * sigma;
    double best = std::numeric_limits<double>::infinity();
    for (double frac : {0.1, 0.5}) {
        const double T = frac * s2;
        for (const Point& xi : xis) {
            const double num = adaptive_simpson(
                [&](double t) { return std::pow(s2 / (s2 + t), 0.5 * dim) * attenuation(t, xi, sigma, dim); }, 0.0,
                T, 1e-12);
            const double den = adaptive_simpson([&](double t) { return attenuation(t, xi, sigma, dim); }, 0.0, T,
                                                1e-12);
            best = std::min(best, num / den);
        }
    }
    return M_E * best;
}

double offdiag_constant(int dim, double sigma) { return std::pow(2.0 * M_PI * sigma * sigma, -0.5 * dim); }

void check_gramian_hypothesis(const FrameParams& params, const Point& x0, const BoxDomain& omega, double T)
{
    const double s2 = params.sigma * params.sigma;
    for (int k = 0; k < omega.dim; ++k)
        if (omega.lo[k] - x0[k] < -s2 || omega.hi[k] - x0[k] > s2)
            fail(ErrorKind::HypothesisViolation,
                 "Omega is not contained in x0 + [-sigma^2, sigma^2]^d (sigma^2 = " + format_double(s2) + ")",
                 {s2});
    if (!(T > 0.0 && T < s2))
        fail(ErrorKind::HypothesisViolation, "horizon must satisfy 0 < T < sigma^2", {T, s2});
}

namespace {

// Distinct |xi_n|^2 over the indices; cls maps each index to its class.
std::vector<double> xi2_classes(const FrameParams& p, const std::vector<Lattice>& indices, std::vector<std::size_t>& cls)
{
    std::map<long, std::size_t> of;
    std::vector<double> xi2;
    cls.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const long key = lattice_norm2(indices[i], p.dim);
        auto it = of.find(key);
        if (it == of.end()) {
            it = of.emplace(key, xi2.size()).first;
            xi2.push_back(norm2(p.xi(indices[i]), p.dim));
        }
        cls[i] = it->second;
    }
    return xi2;
}

} // namespace

std::vector<DiagBound> diag_bounds_all(const Frame& frame, const std::vector<Lattice>& indices,
                                       const ObservationSet& omega, double T, const DiagBoundOptions& opt)
{
    const FrameParams& p = frame.params;
    const int d = p.dim;
    check_gramian_hypothesis(p, frame.x0, omega.domain, T);
    const double s2 = p.sigma * p.sigma;
    const double kappa = opt.kappa > 0.0 ? opt.kappa : gramian_constant(d);
    const std::size_t N = indices.size();
    std::vector<std::size_t> cls;
    const std::vector<double> xi2 = xi2_classes(p, indices, cls);
    const std::size_t C = xi2.size();

    // |phi_n(t,x)|^2 = g_t(x) A(t,n); W(t) = int_omega g_t.
    const SpaceRule rule = omega.full_space ? SpaceRule{} : space_rule(omega.mask, 4);
    auto W = [&](double t) {
        return omega.full_space ? std::pow(s2 / (s2 + t), 0.5 * d) : gauss_mass(rule, frame.x0, p.sigma, d, t);
    };
    auto eval = [&](const TimeMesh& mesh) {
        const std::size_t K = mesh.t.size();
        std::vector<double> w(K), b(K);
        parallel_for(K, [&](std::size_t i) {
            w[i] = W(mesh.t[i]);
            b[i] = ball_fraction(omega, frame.x0, mesh.t[i], p.sigma);
        });
        std::vector<double> out(2 * C);
        parallel_for(C, [&](std::size_t n) {
            double gv = 0.0, bv = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                const double t = mesh.t[i];
                const double A = std::exp(-2.0 * t * s2 * xi2[n] / (s2 + t));
                gv += mesh.w[i] * w[i] * A;
                bv += mesh.w[i] * b[i] * A;
            }
            out[2 * n] = gv;
            out[2 * n + 1] = bv;
        });
        return out;
    };
    const std::vector<double> v = refine_time_integrals(eval, T, opt.rel_tol);
    const double lower_pref = kappa * std::exp(-1.0);
    const double upper_pref = kappa * (1.0 + std::erfc(1.0)) / std::erf(1.0);
    std::vector<DiagBound> out(N);
    for (std::size_t i = 0; i < N; ++i) {
        out[i].n = indices[i];
        out[i].value = v[2 * cls[i]];
        out[i].lower = lower_pref * v[2 * cls[i] + 1];
        out[i].upper = upper_pref * v[2 * cls[i] + 1];
    }
    if (opt.perturb != 0.0 && N > 0)
        out[0].value *= 1.0 + opt.perturb;
    return out;
}

std::vector<double> diagonal_gramian(const Frame& frame, const std::vector<Lattice>& indices,
                                     const ObservationSet& omega, double T, double rel_tol)
{
    if (!(T > 0.0))
        fail(ErrorKind::NonpositiveTime, "Gramian horizon must be positive");
    const FrameParams& p = frame.params;
    const int d = p.dim;
    const double s2 = p.sigma * p.sigma;
    const std::size_t N = indices.size();
    std::vector<std::size_t> cls;
    const std::vector<double> xi2 = xi2_classes(p, indices, cls);
    const std::size_t C = xi2.size();
    const SpaceRule rule = omega.full_space ? SpaceRule{} : space_rule(omega.mask, 4);
    if (!omega.full_space && rule.x.empty())
        return std::vector<double>(N, 0.0);
    auto eval = [&](const TimeMesh& mesh) {
        const std::size_t K = mesh.t.size();
        std::vector<double> w(K);
        parallel_for(K, [&](std::size_t i) {
            w[i] = omega.full_space ? std::pow(s2 / (s2 + mesh.t[i]), 0.5 * d)
                                    : gauss_mass(rule, frame.x0, p.sigma, d, mesh.t[i]);
        });
        std::vector<double> out(C);
        parallel_for(C, [&](std::size_t n) {
            double acc = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                const double t = mesh.t[i];
                acc += mesh.w[i] * w[i] * std::exp(-2.0 * t * s2 * xi2[n] / (s2 + t));
            }
            out[n] = acc;
        });
        return out;
    };
    const std::vector<double> v = refine_time_integrals(eval, T, rel_tol);
    std::vector<double> g(N);
    for (std::size_t i = 0; i < N; ++i)
        g[i] = v[cls[i]];
    return g;
}

DiagBound diag_bounds(const Frame& frame, const Lattice& n, const ObservationSet& omega, double T,
                      const DiagBoundOptions& opt)
{
    const DiagBound b = diag_bounds_all(frame, {n}, omega, T, opt).front();
    if (!b.ok())
        fail(ErrorKind::BoundViolation,
             "diagonal bound violated: lower " + format_double(b.lower) + ", value " + format_double(b.value) +
                 ", upper " + format_double(b.upper),
             {b.lower, b.value, b.upper});
    return b;
}

double offdiag_bound_value(const HeatPacket& p, const HeatPacket& q, double measure, double T, double rel_tol)
{
    const int d = p.dim;
    const double s2 = p.sigma * p.sigma;
    double dx2 = 0.0;
    for (int k = 0; k < d; ++k)
        dx2 += (p.x0[k] - q.x0[k]) * (p.x0[k] - q.x0[k]);
    const double C = offdiag_constant(d, p.sigma);
    const double integral = adaptive_simpson(
        [&](double t) {
            const double s = s2 + t;
            return std::pow(s2 / s, 0.5 * d) * std::sqrt(attenuation(t, p.xi, p.sigma, d)) *
                   std::sqrt(attenuation(t, q.xi, p.sigma, d)) * std::exp(-dx2 / (4.0 * s));
        },
        0.0, T, rel_tol);
    return C * measure * integral;
}

OffdiagBound offdiag_bound(const HeatPacket& p, const HeatPacket& q, const ObservationSet& omega, double T,
                           const GramianOptions& opt)
{
    OffdiagBound b;
    b.value = std::abs(gramian_entry(p, q, omega, T, opt));
    b.bound = offdiag_bound_value(p, q, omega.measure(), T);
    if (!b.ok())
        fail(ErrorKind::BoundViolation,
             "off-diagonal bound violated: |G| " + format_double(b.value) + " > " + format_double(b.bound),
             {b.value, b.bound});
    return b;
}

std::vector<OffdiagBound> offdiag_bounds_pencil(const Frame& frame, const GramianPencil& pencil,
                                                const ObservationSet& omega)
{
    check_gramian_hypothesis(frame.params, frame.x0, omega.domain, pencil.T);
    std::vector<OffdiagBound> out;
    const std::size_t P = pencil.indices.size();
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = a + 1; b < P; ++b) {
            OffdiagBound o;
            o.n = pencil.indices[a];
            o.m = pencil.indices[b];
            o.value = std::abs(pencil.G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
            o.bound = offdiag_bound_value(packet(frame, o.n), packet(frame, o.m), omega.measure(), pencil.T);
            out.push_back(o);
        }
    return out;
}

} // namespace heatpack
