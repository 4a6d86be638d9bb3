#pragma once

#include "heatpack/gramian.hpp"
#include "heatpack/heat_oracle.hpp"

#include <cstdint>
#include <vector>

namespace heatpack {

struct PacketConstant {
    double value = 0.0;
    Lattice argmin{};
};

// min over n in S of d_n G_nn(x0, x0, omega); d_n from the Omega quadrature of
// |phi_n(T)|^2 on the mask grid.
PacketConstant c_rand_packets(const Frame& frame, const ObservationSet& omega, double T, double rel_tol = 1e-8);

struct PencilMin {
    double lambda_min = 0.0; // clamped at 0
    double lambda_raw = 0.0;
    Eigen::VectorXcd vector; // minimizing c in the original coordinates
    Eigen::VectorXd eigenvalues;
};

// Smallest lambda with G c = lambda H c, by congruence with the Cholesky
// factor of H.
PencilMin c_det_pencil(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& H);
PencilMin c_det_pencil(const GramianPencil& pencil);

double rayleigh(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& c);

struct SpectralConstant {
    double value = 0.0;
    std::vector<int> mode;  // per-axis wavenumbers of the minimizer
    int rank = 0;           // position of the minimizer in the eigenvalue order (1-based)
    double lambda = 0.0;
};

// min over the first J box Dirichlet modes of (e^{2 lambda_j T} - 1)/(2 lambda_j) int_omega Psi_j^2.
SpectralConstant c_rand_spectral(const ObservationSet& omega, double T, int J);

// Exact cell integral of Psi_j^2 against the mask.
double mode_mass(const ObservationSet& omega, const std::vector<int>& j);

// Unit coefficient vectors with independent +-1 real and imaginary parts.
Eigen::VectorXcd random_signs(std::size_t n, std::uint64_t& state);

struct SandwichTrial {
    double packet_quotient = 0.0;
    double fd_quotient = 0.0;
    double ratio = 0.0;
    bool pass = false;
};

struct SandwichReport {
    double T = 0.0;
    double eta = 0.0;
    double short_time_limit = 0.0;
    bool short_time_ok = false;
    std::uint64_t seed = 0;
    std::vector<SandwichTrial> trials;
    double min_packet = 0.0; // empirical C_T^A
    double min_fd = 0.0;     // empirical C_T
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double pencil_min = 0.0; // smallest eigenvalue of the full pencil; NaN when H is degenerate
    bool pass = false;
};

struct SandwichOptions {
    int trials = 20;
    std::uint64_t seed = 1;
    double eta = 0.5;
    double eta0 = 0.0;          // short-time lemma threshold
    double c_sd = 1.0;
    bool unit_first_trial = false; // first trial uses c = e_0
    bool throw_on_violation = true;
};

// Packet quotient c*Gc / c*Hc from a pencil over all of S against the FD
// quotient of the initial datum sum c_n phi_n(0, .). Throws
// PreconditionViolation outside the short-time regime and SandwichViolation
// with the offending trial.
SandwichReport sandwich_check(const Frame& frame, const BumpSpec& bump, const ObservationSet& omega, double T,
                              const SandwichOptions& opt);

} // namespace heatpack
