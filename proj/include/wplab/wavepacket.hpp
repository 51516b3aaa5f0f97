#pragma once

// Wavepacket domain types and observables. The normalized complex field on
// a grid is the particle; species and the integer quanta count ride along
// as metadata. Natural units throughout: hbar = 1.

#include <algorithm>
#include <complex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/fft.hpp"
#include "wplab/grid.hpp"

namespace wplab {

struct Wavepacket {
    Grid1D grid;
    std::vector<cdouble> amplitudes;
    double time = 0.0;
    double mass = 1.0;
    std::string species = "electron";
    int quanta = 1;
    // Number of packets merged into this one (1 for an elementary packet).
    int coalesced_from = 1;

    double norm2() const {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s * grid.spacing;
    }

    double norm() const { return std::sqrt(norm2()); }
};

struct Moments {
    double mean_x = 0.0;
    double delta_x = 0.0;
    double mean_p = 0.0;
    double delta_p = 0.0;
};

// A set of distinct wavepackets (e.g. an atom: one proton packet plus one
// electron packet). Members evolve and reduce independently; there is no
// aggregate-wide reduction operation anywhere in this library.
struct Aggregate {
    std::vector<Wavepacket> members;

    explicit Aggregate(std::vector<Wavepacket> m) : members(std::move(m)) {
        require(!members.empty(), Errc::invalid_argument, "aggregate must have members");
    }
};

namespace detail {

inline int edge_band_nodes(const Grid1D& g) {
    return std::max(1, g.n_points / 20); // outer 5% of nodes, per side
}

} // namespace detail

// |psi|^2 mass in the outer bands of the grid (5% of nodes on each side).
inline double boundary_tail_mass(const Wavepacket& wp) {
    const int band = detail::edge_band_nodes(wp.grid);
    double s = 0.0;
    for (int i = 0; i < band; ++i) {
        s += std::norm(wp.amplitudes[static_cast<std::size_t>(i)]);
        s += std::norm(wp.amplitudes[static_cast<std::size_t>(wp.grid.n_points - 1 - i)]);
    }
    return s * wp.grid.spacing;
}

inline void renormalize(Wavepacket& wp) {
    const double n = wp.norm();
    require(n > 0.0, Errc::invalid_argument, "cannot normalize a zero field");
    const double inv = 1.0 / n;
    for (auto& a : wp.amplitudes) a *= inv;
}

inline void check_normalized(const Wavepacket& wp, double tol = 1e-6) {
    const double n = wp.norm();
    require(std::abs(n - 1.0) <= tol, Errc::not_normalized,
            "norm = " + std::to_string(n));
}

inline Wavepacket make_gaussian(const Grid1D& grid, double center, double momentum,
                                double sigma, double mass = 1.0,
                                const std::string& species = "electron") {
    require(sigma >= 4.0 * grid.spacing, Errc::grid_too_coarse,
            "sigma = " + std::to_string(sigma) + " < 4 * spacing = " +
                std::to_string(4.0 * grid.spacing));
    require(mass > 0.0, Errc::invalid_argument, "mass must be positive");

    Wavepacket wp;
    wp.grid = grid;
    wp.mass = mass;
    wp.species = species;
    wp.amplitudes.resize(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.x(i);
        const double d = x - center;
        const double env = std::exp(-d * d / (4.0 * sigma * sigma));
        wp.amplitudes[static_cast<std::size_t>(i)] =
            env * std::polar(1.0, momentum * x);
    }
    renormalize(wp);
    const double tail = boundary_tail_mass(wp);
    require(tail <= 1e-10, Errc::boundary_leak,
            "edge-band mass " + std::to_string(tail) + " exceeds 1e-10");
    return wp;
}

// Spectral probability weights w_j = |X_j|^2 dx / n for the FFT X of the
// amplitudes; they sum to norm^2 by Parseval.
inline std::vector<double> spectral_weights(const Wavepacket& wp) {
    std::vector<cdouble> f = fft(wp.amplitudes);
    std::vector<double> w(f.size());
    const double scale = wp.grid.spacing / static_cast<double>(wp.grid.n_points);
    for (std::size_t j = 0; j < f.size(); ++j) w[j] = std::norm(f[j]) * scale;
    return w;
}

inline Moments moments(const Wavepacket& wp) {
    check_normalized(wp);
    const Grid1D& g = wp.grid;

    Moments m;
    double wsum = 0.0;
    for (int i = 0; i < g.n_points; ++i) {
        const double w = std::norm(wp.amplitudes[static_cast<std::size_t>(i)]) * g.spacing;
        m.mean_x += w * g.x(i);
        wsum += w;
    }
    m.mean_x /= wsum;
    double var_x = 0.0;
    for (int i = 0; i < g.n_points; ++i) {
        const double w = std::norm(wp.amplitudes[static_cast<std::size_t>(i)]) * g.spacing;
        const double d = g.x(i) - m.mean_x;
        var_x += w * d * d;
    }
    m.delta_x = std::sqrt(std::max(0.0, var_x / wsum));

    const std::vector<double> sw = spectral_weights(wp);
    double pw = 0.0;
    for (int j = 0; j < g.n_points; ++j) {
        m.mean_p += sw[static_cast<std::size_t>(j)] * g.k(j);
        pw += sw[static_cast<std::size_t>(j)];
    }
    m.mean_p /= pw;
    double var_p = 0.0;
    for (int j = 0; j < g.n_points; ++j) {
        const double d = g.k(j) - m.mean_p;
        var_p += sw[static_cast<std::size_t>(j)] * d * d;
    }
    m.delta_p = std::sqrt(std::max(0.0, var_p / pw));
    return m;
}

inline double heisenberg_product(const Wavepacket& wp) {
    const Moments m = moments(wp); // includes the normalization check
    return m.delta_x * m.delta_p;
}

struct OverlapResult {
    bool overlaps = false;
    double measure = 0.0;
};

inline constexpr double kDefaultOverlapThreshold = 1e-8;

// Product-integral overlap measure over the common grid. Dissimilar species
// never coalesce, so mixing species here is an error, not a false.
inline OverlapResult overlap_measure(std::span<const Wavepacket> packets,
                                     double threshold = kDefaultOverlapThreshold) {
    require(!packets.empty(), Errc::invalid_argument, "no packets given");
    const Grid1D& g = packets.front().grid;
    for (const auto& wp : packets) {
        require(wp.grid == g, Errc::grid_mismatch, "packets live on different grids");
        require(wp.species == packets.front().species, Errc::species_mismatch,
                "dissimilar packets cannot coalesce: " + wp.species + " vs " +
                    packets.front().species);
    }
    double measure = 0.0;
    for (int i = 0; i < g.n_points; ++i) {
        double prod = 1.0;
        for (const auto& wp : packets)
            prod *= std::abs(wp.amplitudes[static_cast<std::size_t>(i)]);
        measure += prod;
    }
    measure *= g.spacing;
    return {measure > threshold, measure};
}

// Merge overlapping similar packets into one. The combined profile is the
// normalized pointwise sum (a declared modeling convention; the physics
// downstream uses only the quanta ledger and the overlap gate). Quanta add.
inline Wavepacket coalesce(std::span<const Wavepacket> packets,
                           double threshold = kDefaultOverlapThreshold) {
    const OverlapResult ov = overlap_measure(packets, threshold);
    require(ov.overlaps, Errc::no_overlap,
            "overlap measure " + std::to_string(ov.measure) + " below threshold");
    if (packets.size() == 1) return packets.front();

    Wavepacket out = packets.front();
    for (std::size_t k = 1; k < packets.size(); ++k) {
        const Wavepacket& wp = packets[k];
        for (std::size_t i = 0; i < out.amplitudes.size(); ++i)
            out.amplitudes[i] += wp.amplitudes[i];
        out.quanta += wp.quanta;
    }
    renormalize(out);
    out.coalesced_from = static_cast<int>(packets.size());
    return out;
}

// Inverse of coalescence: `parts` normalized packets sharing the input
// profile, quanta split as evenly as possible (remainder to earlier parts).
// A 1-quantum packet cannot split in two; quanta are conserved exactly.
inline std::vector<Wavepacket> split(const Wavepacket& wp, int parts) {
    require(parts >= 1, Errc::invalid_argument, "parts must be >= 1");
    require(parts <= wp.quanta, Errc::too_many_parts,
            std::to_string(wp.quanta) + "-quantum packet cannot split into " +
                std::to_string(parts) + " parts");
    if (parts == 1) return {wp};

    const int base = wp.quanta / parts;
    const int rem = wp.quanta % parts;
    std::vector<Wavepacket> out;
    out.reserve(static_cast<std::size_t>(parts));
    for (int i = 0; i < parts; ++i) {
        Wavepacket part = wp;
        renormalize(part);
        part.quanta = base + (i < rem ? 1 : 0);
        part.coalesced_from = 1;
        out.push_back(std::move(part));
    }
    return out;
}

} // namespace wplab
