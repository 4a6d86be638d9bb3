#pragma once

#include "heatpack/grid.hpp"
#include "heatpack/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace heatpack {

// Built-in profile: A_d exp(-1/(1-|y|^2)) on the unit ball, L2-normalized.
double bump_profile(const Point& y, int dim);
double bump_normalization(int dim);

// Sup norms of the built-in profile: C^0, C^d and C^{2+s} (s smallest integer > d/2),
// the latter two by central differences.
struct BumpNorms {
    double c0 = 0.0;
    double cd = 0.0;
    double c2s = 0.0;
    int s = 1;
};
const BumpNorms& bump_norms(int dim);

struct BumpSpec {
    int dim = 1;
    double epsilon0 = 0.1;
    Point center{};
    double delta = 0.5;
    std::string profile = "bump";

    // psi_{eps0}(x) = eps0^{-d/2} psi((x - x0)/eps0)
    double operator()(const Point& x) const;
    void validate(const BoxDomain& omega) const;
};

enum class TruncationMode { Box, Band };
enum class EpsilonPolicy { Measured, Ob1, Fixed };

const char* mode_name(TruncationMode m);
TruncationMode parse_mode(const std::string& s);
const char* policy_name(EpsilonPolicy p);
EpsilonPolicy parse_policy(const std::string& s);

struct FrameParams {
    int dim = 1;
    double epsilon0 = 0.0;
    double delta = 0.0;
    double eta = 0.0;
    double log_inv_epsilon = 0.0; // ln(1/eps); eps itself may underflow
    double epsilon = 0.0;
    double sigma = 0.0;
    double L = 0.0;
    TruncationMode mode = TruncationMode::Box;
    int k = 1;
    double M1 = 0.0;
    std::vector<Lattice> S;

    double loglog() const;
    Point xi(const Lattice& n) const;
};

// How frame_params picks epsilon.
struct EpsilonSearch {
    EpsilonPolicy policy = EpsilonPolicy::Measured;
    double fixed_epsilon = 0.0;   // Fixed policy
    std::size_t max_modes = 200000;
    TruncationMode mode = TruncationMode::Box;
    int k = 1;
    BoxDomain omega;              // error quadrature domain (Measured policy)
    int resolution = 256;         // cells per axis for the error quadrature
};

// sigma and L for a given ln(1/eps); S is filled by truncation_set.
FrameParams params_for(const BumpSpec& bump, double eta, double log_inv_epsilon, TruncationMode mode,
                       int k);

FrameParams frame_params(const BumpSpec& bump, double eta, const EpsilonSearch& search);

std::vector<Lattice> truncation_set(const FrameParams& params, const BumpSpec& bump);
std::size_t truncation_count(const FrameParams& params, const BumpSpec& bump);

cplx coefficient(const Lattice& n, const BumpSpec& bump, const FrameParams& params);
std::vector<cplx> coefficients(const BumpSpec& bump, const FrameParams& params);

struct Frame {
    FrameParams params;
    Point x0{};
    std::vector<cplx> c; // aligned with params.S
    double measured_error = 0.0;
};

// Relative L2(Omega) error of the t=0 reconstruction against the bump,
// composite Gauss–Legendre with `order` nodes per cell.
double frame_error(const Frame& frame, const BumpSpec& bump, const BoxDomain& omega, int resolution,
                   int order = 4);

Frame build_frame(const BumpSpec& bump, double eta, const EpsilonSearch& search);

// build_frame, or for the measured policy the best frame reachable within the
// mode budget when no epsilon meets eta. certified is false in that case.
struct FrameOutcome {
    Frame frame;
    bool certified = false;
    std::string note;
};
FrameOutcome build_frame_or_best(const BumpSpec& bump, double eta, const EpsilonSearch& search);

struct HeatPacket {
    int dim = 1;
    Point x0{};
    Point xi{};
    double sigma = 1.0;
};

HeatPacket packet(const Frame& frame, const Lattice& n);
cplx packet_value(const HeatPacket& p, double t, const Point& x);
double packet_modulus2_real_form(const HeatPacket& p, double t, const Point& x);

cplx superpose(const Frame& frame, double t, const Point& x);
ComplexField superpose_grid(const Frame& frame, double t, const BoxDomain& omega, const Resolution& res);

// Decay bound |c_n| <= C (sigma eps0 / L^2)^{d/2} (eps0 |xi_n|)^{-k}: C fitted on
// 0 < eps0|xi_n| <= fit_limit, then checked on all of S \ {0}.
struct DecayFit {
    double C = 0.0;
    int k = 1;
    std::size_t fitted = 0;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0; // max |c_n| / (C * bound shape)
};
DecayFit fit_decay(const Frame& frame, int k, double fit_limit = 4.0);

} // namespace heatpack
