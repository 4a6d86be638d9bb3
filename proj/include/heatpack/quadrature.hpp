#pragma once

#include <functional>
#include <vector>

namespace heatpack {

// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

const GaussRule& gauss_legendre(int order);

// Composite Gauss–Legendre nodes for [a, b] split into equal panels.
struct Nodes1d {
    std::vector<double> x;
    std::vector<double> w;
};

Nodes1d composite_gauss(double a, double b, int panels, int order);

// Composite Simpson rule on [0, T] over a geometrically graded mesh:
// breakpoints 0, T r^{-K}, ..., T r^{-1}, T with T r^{-K} <= floor_rel * T.
// Each panel carries two Simpson subintervals.
struct TimeMesh {
    std::vector<double> t;
    std::vector<double> w;
};

TimeMesh graded_simpson(double T, double ratio, double floor_rel = 1e-14);

// Integrates a family of time integrands on [0, T]. eval(mesh) returns the
// values of every integral on that mesh; the ratio is refined r -> sqrt(r)
// until every change is below rel_tol times its scale. The scale of entry i is
// the largest magnitude among entries sharing groups[i] (each entry is its own
// group when groups is empty), floored at abs_floor. Throws
// QuadratureNonConvergence after max_levels.
std::vector<double> refine_time_integrals(
    const std::function<std::vector<double>(const TimeMesh&)>& eval, double T, double rel_tol,
    int max_levels = 12, const std::vector<int>& groups = {}, double abs_floor = 1e-300);

// Adaptive Simpson on [a, b] with relative tolerance (scaled by the running
// integral magnitude).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth = 40);

} // namespace heatpack
