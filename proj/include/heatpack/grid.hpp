#pragma once

#include "heatpack/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace heatpack {

struct BoxDomain {
    int dim = 1;
    Point lo{};
    Point hi{};

    double extent(int k) const { return hi[k] - lo[k]; }
    double volume() const;
    bool contains(const Point& x) const;
    // Exact distance from an interior point to the box boundary.
    double distance_to_boundary(const Point& y) const;
    Point center() const;
    void validate() const;
};

using Resolution = std::array<int, kMaxDim>;

// Cell-centered samples over a BoxDomain, stored with the last axis fastest.
template <class T>
struct GridField {
    BoxDomain domain;
    Resolution res{1, 1};
    std::vector<T> values;

    GridField() = default;
    GridField(const BoxDomain& d, const Resolution& r, T fill = T{});

    std::size_t size() const { return values.size(); }
    int dim() const { return domain.dim; }
    double h(int k) const { return domain.extent(k) / res[k]; }
    double cell_volume() const;
    Point center(std::size_t flat) const;
    std::array<int, kMaxDim> unflatten(std::size_t flat) const;
    std::size_t flatten(const std::array<int, kMaxDim>& idx) const;
    bool is_boundary_cell(std::size_t flat) const;

    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
};

using RealField = GridField<double>;
using ComplexField = GridField<cplx>;

extern template struct GridField<double>;
extern template struct GridField<cplx>;

Resolution uniform_resolution(int dim, int n);

// Sum of samples times cell volume.
double integrate(const RealField& f);
// L2 norm squared of a complex field with cell-volume weights.
double norm2(const ComplexField& f);

// HPGRID text format.
std::string to_hpgrid(const RealField& f);
std::string to_hpgrid(const ComplexField& f);
RealField real_from_hpgrid(const std::string& text);
ComplexField complex_from_hpgrid(const std::string& text);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// PGM (P2) export. Values are clamped to [0, 1] and scaled to 0..255; in 2-D
// rows run over axis 1 from top (high) to bottom, columns over axis 0.
std::string to_pgm(const RealField& f);

std::string format_double(double v);

} // namespace heatpack
