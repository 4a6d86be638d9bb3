#pragma once

#include "heatpack/grid.hpp"
#include "heatpack/packet_frame.hpp"

#include <string>
#include <vector>

namespace heatpack {

double free_kernel(int dim, double t, const Point& x, const Point& y);

// Kac's principle bound on k^{R^d}(t,x,y) - k_Omega(t,x,y).
double kac_bound(double t, const Point& y, const BoxDomain& omega);

// Free-space evolution of grid data by direct Gaussian-kernel quadrature,
// evaluated at the cell centers.
RealField free_evolve(const RealField& g, double t);

// Free-space evolution of the scaled bump itself at the cell centers, by
// Gauss–Legendre quadrature of the Gaussian convolution over the bump support
// (panels resolve both the bump and the kernel width).
RealField free_evolve_bump(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res, double t);

RealField sample(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res);

struct FdOptions {
    std::vector<double> snapshot_times;
    const RealField* mask = nullptr; // records int mask |u|^2 at every step
    // Largest allowed |g| on boundary cells relative to max |g|. Sampled Dirichlet
    // eigenfunctions are O(h) there and are admitted by raising this.
    double boundary_tol = 1e-12;
};

struct FdSolution {
    double dt = 0.0;
    int steps = 0;
    double T = 0.0;
    std::string scheme = "crank-nicolson, cell-centered, antisymmetric ghost cells";
    std::vector<double> snapshot_times;
    std::vector<ComplexField> snapshots;
    // Per step k = 0..steps:
    std::vector<double> norm2;     // ||u^k||^2
    std::vector<double> grad2;     // ||D u^k||^2
    std::vector<double> observed2; // int mask |u^k|^2 (empty without mask)
    // Per step interval k = 0..steps-1: ||D (u^k + u^{k+1})/2||^2
    std::vector<double> grad2_mid;
};

FdSolution fd_solve(const RealField& g, double T, const FdOptions& opt = {});
FdSolution fd_solve(const ComplexField& g, double T, const FdOptions& opt = {});

// Trapezoid in time of the recorded masked norms.
double observed_integral(const FdSolution& sol);

struct EnergyReport {
    double initial = 0.0;          // 1/2 ||g||^2
    double residual = 0.0;         // max_k |1/2||u^k||^2 + int_0^{t_k} ||Du||^2 - 1/2||g||^2| / (1/2||g||^2)
    double naive_residual = 0.0;   // same with the trapezoid of ||D u^k||^2
    bool monotone = true;          // ||u^k|| nonincreasing
    bool strictly_decreasing = true;
    double tol = 1e-6;
    bool pass = true;
};
EnergyReport energy_check(const FdSolution& sol, double tol = 1e-6);

// m0 of condition (bullet): max |u| over snapshot times x {mask > 0} for the bump solution.
double measure_m0(const BumpSpec& bump, const RealField& mask, double T, int snapshots = 8);

struct WholeVsDomainReport {
    double T = 0.0;
    double eta0 = 0.0;
    double measured = 0.0;
    double bound = 0.0; // (eta0/2) M0
    bool pass = false;
    std::vector<double> times;
};
WholeVsDomainReport whole_vs_domain_check(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res,
                                          double T, double eta0, int snapshots = 4);

struct KacReport {
    double T = 0.0;
    double tol = 0.0;
    std::vector<double> times;
    std::vector<double> bound;   // int kac_bound(t,y) psi(y) dy per time
    std::vector<double> min_diff;
    std::vector<double> max_diff;
    double worst_low = 0.0;      // min over all of (free - FD)
    double worst_excess = 0.0;   // max over all of (free - FD - bound)
    bool pass = false;
};
KacReport kac_check(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res, double T, double tol,
                    const std::vector<double>& fractions = {0.5, 0.75, 1.0});

// Largest t allowed by the short-time lemma: eta0 eps0^{2+s} / (C_{s,d} M2).
double short_time_limit(const BumpSpec& bump, double eta0, double c_sd = 1.0);

struct ShortTimeReport {
    double t = 0.0;
    double limit = 0.0;
    double eta0 = 0.0;
    double measured = 0.0;
    bool pass = false;
    std::vector<double> times;
    std::vector<double> sups;
    bool monotone = true; // flagged, not asserted
};
ShortTimeReport short_time_check(const BumpSpec& bump, const BoxDomain& omega, const Resolution& res, double eta0,
                                 double t, double c_sd = 1.0);

} // namespace heatpack
