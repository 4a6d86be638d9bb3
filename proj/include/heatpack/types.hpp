#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace heatpack {

constexpr int kMaxDim = 2;

using cplx = std::complex<double>;
using Point = std::array<double, kMaxDim>;
using Lattice = std::array<int, kMaxDim>;

inline double norm2(const Point& p, int dim)
{
    double s = 0.0;
    for (int k = 0; k < dim; ++k)
        s += p[k] * p[k];
    return s;
}

inline long lattice_norm2(const Lattice& n, int dim)
{
    long s = 0;
    for (int k = 0; k < dim; ++k)
        s += static_cast<long>(n[k]) * n[k];
    return s;
}

inline Lattice negate(Lattice n)
{
    for (auto& v : n)
        v = -v;
    return n;
}

} // namespace heatpack
