#pragma once

#include "heatpack/grid.hpp"
#include "heatpack/packet_frame.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace heatpack {

double attenuation(double t, const Point& xi, double sigma, int dim);

// (1 + a1 b + a2 b^2 + a3 b^3 + a4 b^4)^{-4}
double erfc_rational(double b);

struct ObservationSet {
    BoxDomain domain;
    RealField mask;          // values in [0, 1]
    double M = 0.0;          // int mask / |Omega|
    bool full_space = false; // omega = R^d; the mask is ignored

    double measure() const;
};

ObservationSet observation_from_mask(const RealField& mask);
ObservationSet full_space_observation(const BoxDomain& omega);
ObservationSet whole_domain(const BoxDomain& omega, const Resolution& res);
// Mask of B(center, radius); cut cells carry their area fraction estimated on a
// sub x sub sample grid.
ObservationSet ball_observation(const BoxDomain& omega, const Resolution& res, const Point& center, double radius,
                                int sub = 16);
// Mask of the box [lo, hi] with exact overlap fractions.
ObservationSet box_observation(const BoxDomain& omega, const Resolution& res, const Point& lo, const Point& hi);

std::uint64_t mask_hash(const RealField& mask);

// |omega cap B(x0, 2 sqrt(sigma^2 + t))| / |B(...)|
double ball_fraction(const ObservationSet& omega, const Point& x0, double t, double sigma);

// Cell-wise tensor Gauss–Legendre nodes over the mask support; weights carry
// the mask value.
struct SpaceRule {
    std::vector<Point> x;
    std::vector<double> w;
};
SpaceRule space_rule(const RealField& mask, int order);

// Sum over the rule of |phi_n(t, x)|^2 / A(t, n) (independent of n).
double gauss_mass(const SpaceRule& rule, const Point& x0, double sigma, int dim, double t);

// G_nn for every index via the shared mask integral of |phi_n|^2 / A.
std::vector<double> diagonal_gramian(const Frame& frame, const std::vector<Lattice>& indices,
                                     const ObservationSet& omega, double T, double rel_tol = 1e-8);

struct GramianOptions {
    double rel_tol = 1e-8;
    int space_order = 4;
};

// int_0^T int_omega phi_p conj(phi_q) dx dt
cplx gramian_entry(const HeatPacket& p, const HeatPacket& q, const ObservationSet& omega, double T,
                   const GramianOptions& opt = {});

// All entries for a packet list at once.
Eigen::MatrixXcd gramian_matrix(const std::vector<HeatPacket>& packets, const ObservationSet& omega, double T,
                                const GramianOptions& opt = {});

// int_Omega phi_p(T) conj(phi_q(T)) dx over the whole box (T = 0 allowed).
Eigen::MatrixXcd final_gram(const std::vector<HeatPacket>& packets, const BoxDomain& omega, const Resolution& res,
                            double T, int space_order = 4);

struct GramianPencil {
    int dim = 1;
    std::vector<Lattice> indices;
    Eigen::MatrixXcd G;
    Eigen::MatrixXcd H;
    double T = 0.0;
    std::uint64_t mask_hash = 0;
    double h_min_eig = 0.0;
    double h_max_eig = 0.0;
};

// First `count` indices of S in (|n|^2, lexicographic) order.
std::vector<Lattice> pencil_indices(const FrameParams& params, std::size_t count);

// Fills G and H, symmetrizes, and checks H: PencilDegenerate when Cholesky
// fails or the smallest eigenvalue is below cond_limit^{-1} times the largest.
GramianPencil assemble_pencil(const Frame& frame, const std::vector<Lattice>& indices, const ObservationSet& omega,
                              const Resolution& res, double T, const GramianOptions& opt = {},
                              double cond_limit = 1e12);

void write_pencil(const GramianPencil& pencil, const std::string& dir);

// Diagonal bound constant kappa_d (the frozen product C_d sigma^d).
double gramian_constant(int dim);
// Calibration sweep: e times the smallest full-space ratio G_nn / int_0^T A dt
// over xi in `xis` and T in {0.1 sigma^2, 0.5 sigma^2}.
double calibrate_gramian_constant(int dim, double sigma, const std::vector<Point>& xis);
// Off-diagonal constant: sup of the packet amplitude product, (2 pi sigma^2)^{-d/2}.
double offdiag_constant(int dim, double sigma);

struct DiagBound {
    Lattice n{};
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;
    bool ok() const { return lower <= value && value <= upper; }
};

struct DiagBoundOptions {
    double rel_tol = 1e-8;
    double perturb = 0.0;    // added relative perturbation of the first value (fault injection)
    double kappa = 0.0;      // 0 selects gramian_constant(dim)
};

// Checks the box and horizon hypotheses: Omega - x0 inside [-sigma^2, sigma^2]^d and T < sigma^2.
void check_gramian_hypothesis(const FrameParams& params, const Point& x0, const BoxDomain& omega, double T);

// Bounds for every n in `indices`, sharing the space quadrature of |phi|^2 / A
// across n. Does not throw on violation.
std::vector<DiagBound> diag_bounds_all(const Frame& frame, const std::vector<Lattice>& indices,
                                       const ObservationSet& omega, double T, const DiagBoundOptions& opt = {});

// Single index; throws BoundViolation with (lower, value, upper).
DiagBound diag_bounds(const Frame& frame, const Lattice& n, const ObservationSet& omega, double T,
                      const DiagBoundOptions& opt = {});

struct OffdiagBound {
    Lattice n{};
    Lattice m{};
    double bound = 0.0;
    double value = 0.0; // |G_nm|
    bool ok() const { return value <= bound; }
};

// bound c) for a pair; value from gramian_entry. Throws BoundViolation.
OffdiagBound offdiag_bound(const HeatPacket& p, const HeatPacket& q, const ObservationSet& omega, double T,
                           const GramianOptions& opt = {});

// Bound c) integral alone.
double offdiag_bound_value(const HeatPacket& p, const HeatPacket& q, double measure, double T, double rel_tol = 1e-10);

// Bound c) over all pairs n != m of a pencil (does not throw).
std::vector<OffdiagBound> offdiag_bounds_pencil(const Frame& frame, const GramianPencil& pencil,
                                                const ObservationSet& omega);

} // namespace heatpack
