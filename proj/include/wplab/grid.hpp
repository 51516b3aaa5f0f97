#pragma once

#include <cmath>
#include <cstdint>

#include "wplab/errors.hpp"
#include "wplab/util.hpp"

namespace wplab {

// Uniform 1-D spatial grid. Node i sits at origin + i*spacing. The point
// count must be a power of two (>= 8) so the spectral transform applies.
struct Grid1D {
    int n_points = 0;
    double spacing = 0.0;
    double origin = 0.0;

    Grid1D() = default;

    Grid1D(int n, double dx, double x0) : n_points(n), spacing(dx), origin(x0) {
        require(n >= 8 && (n & (n - 1)) == 0, Errc::invalid_argument,
                "grid n_points must be a power of two >= 8, got " + std::to_string(n));
        require(dx > 0.0 && std::isfinite(dx), Errc::invalid_argument,
                "grid spacing must be positive and finite");
        require(std::isfinite(x0), Errc::invalid_argument, "grid origin must be finite");
    }

    // Grid of n nodes with the domain centered on x = 0.
    static Grid1D centered(int n, double dx) {
        return Grid1D(n, dx, -0.5 * dx * static_cast<double>(n));
    }

    double x(int i) const { return origin + spacing * static_cast<double>(i); }
    double length() const { return spacing * static_cast<double>(n_points); }

    // Angular wavenumber of spectral bin j, in the signed FFT convention.
    double dk() const { return 2.0 * kPi / length(); }
    double k(int j) const {
        const int half = n_points / 2;
        const int jj = (j < half) ? j : j - n_points;
        return dk() * static_cast<double>(jj);
    }

    bool operator==(const Grid1D& o) const {
        return n_points == o.n_points && spacing == o.spacing && origin == o.origin;
    }
};

} // namespace wplab
