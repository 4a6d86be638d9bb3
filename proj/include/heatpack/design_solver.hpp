#pragma once

#include "heatpack/error.hpp"
#include "heatpack/gramian.hpp"

#include <vector>

namespace heatpack {

struct PacketEnergyDensity {
    Lattice n{};
    double d_n = 0.0;
    RealField rho; // d_n int_0^T |phi_n(t,x)|^2 dt at cell centers
};

// Densities for a list of indices at once; indices with equal |xi_n| share the
// computation.
std::vector<PacketEnergyDensity> energy_densities(const Frame& frame, const std::vector<Lattice>& indices, double T,
                                                  const BoxDomain& omega, const Resolution& res,
                                                  double rel_tol = 1e-8);
PacketEnergyDensity energy_density(const Frame& frame, const Lattice& n, double T, const BoxDomain& omega,
                                   const Resolution& res);

// Sum of a * rho times cell volume.
double inner(const RealField& a, const RealField& rho);

struct JValue {
    double value = 0.0;
    std::size_t argmin = 0;
};
JValue J_of_a(const RealField& a, const std::vector<RealField>& rho);

struct Bathtub {
    RealField a;
    double lambda = 0.0;
    double value = 0.0;      // int a phi
    std::size_t marginal = 0; // flat index of the marginal cell
    std::size_t ties = 0;     // cells with phi within 1e-12 max|phi| of lambda
    bool degenerate = false;  // ties exceed four cell layers
};

// Exact maximizer of int a phi over {0 <= a <= 1, int a = M |Omega|}: cells in
// descending phi order (flat index on ties), one fractional marginal cell.
Bathtub bathtub_max(const RealField& phi, double M);
Bathtub bathtub_max(const std::vector<double>& alpha, const std::vector<RealField>& rho, double M);

RealField combine(const std::vector<double>& alpha, const std::vector<RealField>& rho);

struct SaddleOptions {
    int iters = 4000;
    double tol = 1e-6;
    double step_c = 1.0;
    bool polish = true;
};

struct DesignSolution {
    RealField a;
    std::vector<Lattice> indices;
    std::vector<double> alpha; // aligned with indices
    double lambda = 0.0;
    double value = 0.0;       // J(a), lower bound on the saddle value
    double upper = 0.0;       // best max_a int a phi_alpha over iterates
    double gap = 0.0;         // upper - value
    int N = 0;
    int iterations = 0;
    bool converged = false;
    std::size_t fractional_cells = 0;
    bool degenerate = false;
};

class SaddleNoConvergence : public Error {
public:
    SaddleNoConvergence(const std::string& what, DesignSolution best)
        : Error(ErrorKind::NoConvergence, what, {best.gap, best.value}), best_(std::move(best)) {}
    const DesignSolution& best() const { return best_; }

private:
    DesignSolution best_;
};

// sup_a min_n int a rho_n by multiplicative weights with bathtub inner steps.
// Throws SaddleNoConvergence when the gap stays above tol.
DesignSolution saddle_solve_densities(const std::vector<RealField>& rho, double M, const SaddleOptions& opt = {});

// S_N = {n in S : |n| <= N}.
std::vector<Lattice> indices_up_to(const FrameParams& params, int N);

DesignSolution saddle_solve(const Frame& frame, double M, double T, int N, const BoxDomain& omega,
                            const Resolution& res, const SaddleOptions& opt = {});

struct LevelSetReport {
    double tolerance = 0.0;     // h ||grad phi||_inf
    std::size_t levels = 0;
    double min_flagged = 0.0;   // smallest flagged measure over candidate levels
    double min_level = 0.0;
    double allowance = 0.0;     // two cell layers along the crossings of min_level
    double max_flagged = 0.0;   // largest flagged measure (diagnostic)
    bool degenerate = false;
    bool pass = false;
};
LevelSetReport h1_levelset_check(const std::vector<double>& alpha, const std::vector<RealField>& rho);

struct GammaReport {
    Lattice first{};
    double first_xi = 0.0;
    double gamma1 = 0.0;
    Lattice top{};
    double top_xi = 0.0;
    double quotient_top = 0.0; // min over the largest retained |n|
    double ratio = 0.0;        // quotient_top / gamma1
    double u1 = 0.0;
    double u2 = 0.0;
    bool pass = false;
};
// Throws AssertionFailure carrying (gamma1, quotient_top, u1, u2) on failure.
GammaReport h2_gamma_check(const Frame& frame, const ObservationSet& omega, double T, double rel_tol = 1e-8);

struct StabilityReport {
    std::vector<int> N;
    std::vector<DesignSolution> solutions;
    std::vector<double> symdiff;   // consecutive pairs
    std::vector<double> hausdorff; // consecutive pairs, between the {a = 1} cell sets
    std::vector<bool> agree;       // consecutive pairs agree on non-fractional cells
    bool stabilized = false;       // last pair agrees
    bool symdiff_tail_nonincreasing = true;
};
StabilityReport stability_study(const Frame& frame, double M, double T, const std::vector<int>& N_list,
                                const BoxDomain& omega, const Resolution& res, const SaddleOptions& opt = {});

double symmetric_difference(const RealField& a, const RealField& b);
double hausdorff_full_cells(const RealField& a, const RealField& b);
bool agree_on_nonfractional(const RealField& a, const RealField& b);

} // namespace heatpack
