#pragma once

// The action-probability postulate made operational: |psi|^2 dx is the
// probability that a packet induces an effect in dx during the medium's
// response interval. Sampling one effect, whole-packet reduction, and the
// ensemble width measurement (photographic-emulsion style) live here.

#include <cstdint>
#include <string>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/rng.hpp"
#include "wplab/util.hpp"
#include "wplab/wavepacket.hpp"

namespace wplab {

struct DetectionEvent {
    double position = 0.0;
    double time = 0.0;
    std::uint64_t packet_id = 0;
};

struct MediumConfig {
    // Response interval of the homogeneous medium. It cancels out of every
    // sampled probability (the medium detects with certainty within it) and
    // is kept for provenance only.
    double delta_t = 0.0;
    // Width of the packet after reduction.
    double reduction_width = 0.0;

    MediumConfig(double dt, double rw) : delta_t(dt), reduction_width(rw) {
        require(dt > 0.0 && std::isfinite(dt), Errc::invalid_argument,
                "medium delta_t must be positive");
        require(rw > 0.0 && std::isfinite(rw), Errc::invalid_argument,
                "reduction_width must be positive");
    }
};

namespace detail {

// Inverse-CDF sampler for the piecewise-constant density |psi|^2: pick a
// cell by weight, then place the point uniformly inside it. One uniform
// draw per sample. The cumulative table is built once per packet.
class CdfSampler {
public:
    explicit CdfSampler(const Wavepacket& wp) : grid_(wp.grid) {
        cum_.resize(static_cast<std::size_t>(grid_.n_points));
        double acc = 0.0;
        for (int i = 0; i < grid_.n_points; ++i) {
            acc += std::norm(wp.amplitudes[static_cast<std::size_t>(i)]);
            cum_[static_cast<std::size_t>(i)] = acc;
        }
        require(acc > 0.0, Errc::invalid_argument, "zero field cannot act");
    }

    double sample(Philox4x32& rng) const {
        const double u = rng.uniform01() * cum_.back();
        int lo = 0, hi = grid_.n_points - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (cum_[static_cast<std::size_t>(mid)] <= u) lo = mid + 1;
            else hi = mid;
        }
        const double cell_lo = (lo == 0) ? 0.0 : cum_[static_cast<std::size_t>(lo - 1)];
        const double w = cum_[static_cast<std::size_t>(lo)] - cell_lo;
        const double frac = (w > 0.0) ? (u - cell_lo) / w : 0.5;
        return grid_.x(lo) + (frac - 0.5) * grid_.spacing;
    }

private:
    Grid1D grid_;
    std::vector<double> cum_;
};

inline double sample_position(const Wavepacket& wp, Philox4x32& rng) {
    return CdfSampler(wp).sample(rng);
}

} // namespace detail

// Draw the position of one effect from the action density |psi|^2.
// Deterministic for a given seed.
inline DetectionEvent sample_effect(const Wavepacket& wp, const MediumConfig& medium,
                                    std::uint64_t rng_seed, std::uint64_t packet_id = 0) {
    (void)medium; // homogeneous medium: delta_t does not enter the density
    check_normalized(wp);
    Philox4x32 rng(rng_seed);
    return {detail::sample_position(wp, rng), wp.time, packet_id};
}

// An N-quantum packet may act up to N times in one traversal; in a medium
// that detects with certainty, each quantum acts exactly once. A 1-quantum
// packet yields exactly one event.
inline std::vector<DetectionEvent> sample_effects(const Wavepacket& wp,
                                                  const MediumConfig& medium,
                                                  std::uint64_t rng_seed,
                                                  std::uint64_t packet_id = 0) {
    (void)medium;
    check_normalized(wp);
    Philox4x32 rng(rng_seed);
    std::vector<DetectionEvent> events;
    events.reserve(static_cast<std::size_t>(wp.quanta));
    for (int q = 0; q < wp.quanta; ++q)
        events.push_back({detail::sample_position(wp, rng), wp.time, packet_id});
    return events;
}

// Objective reduction: the entire field is replaced in one operation by a
// normalized Gaussian of the configured width centered on the event. No
// sub-region of the packet is addressable here -- reduction is global by
// construction. Species, quanta, mass and time carry over.
inline Wavepacket reduce(const Wavepacket& wp, const DetectionEvent& event,
                         const MediumConfig& medium) {
    const double w = medium.reduction_width;
    require(w >= 2.0 * wp.grid.spacing, Errc::width_too_small,
            "reduction_width " + std::to_string(w) + " < 2 * spacing");
    Wavepacket out = wp;
    for (int i = 0; i < wp.grid.n_points; ++i) {
        const double d = wp.grid.x(i) - event.position;
        out.amplitudes[static_cast<std::size_t>(i)] =
            cdouble(std::exp(-d * d / (4.0 * w * w)), 0.0);
    }
    renormalize(out);
    return out;
}

// One traversal of a medium: the packet acts with each of its quanta, then
// splits into that many 1-quantum packets, each reduced at its own event.
struct TraversalResult {
    std::vector<DetectionEvent> events;
    std::vector<Wavepacket> packets;
};

inline TraversalResult traverse_medium(const Wavepacket& wp, const MediumConfig& medium,
                                       std::uint64_t rng_seed, std::uint64_t packet_id = 0) {
    TraversalResult res;
    res.events = sample_effects(wp, medium, rng_seed, packet_id);
    std::vector<Wavepacket> parts = split(wp, wp.quanta);
    for (std::size_t i = 0; i < parts.size(); ++i)
        res.packets.push_back(reduce(parts[i], res.events[i], medium));
    return res;
}

struct EmulsionResult {
    std::vector<DetectionEvent> events;
    double width_estimate = 0.0;
    double stderr_width = 0.0;
};

// Ensemble width measurement: n independent copies of the prototype each
// produce one spot; the spread of the spots images the packet width.
// Per-particle seeds come from (master seed, particle index), so the result
// is independent of how the loop is scheduled.
inline EmulsionResult run_emulsion_experiment(const Wavepacket& prototype,
                                              std::int64_t n_particles,
                                              const MediumConfig& medium,
                                              std::uint64_t master_seed,
                                              int threads = 1) {
    (void)medium; // homogeneous medium: delta_t cancels out of the statistics
    require(n_particles >= 100, Errc::ensemble_too_small,
            "need at least 100 particles, got " + std::to_string(n_particles));
    check_normalized(prototype);

    EmulsionResult res;
    res.events.resize(static_cast<std::size_t>(n_particles));
    const detail::CdfSampler sampler(prototype);
    parallel_for(n_particles, threads, [&](std::int64_t i) {
        const std::uint64_t seed =
            derive_seed(master_seed, "emulsion", static_cast<std::uint64_t>(i));
        Philox4x32 rng(seed);
        res.events[static_cast<std::size_t>(i)] =
            DetectionEvent{sampler.sample(rng), prototype.time, static_cast<std::uint64_t>(i)};
    });

    std::vector<double> xs;
    xs.reserve(res.events.size());
    for (const auto& e : res.events) xs.push_back(e.position);
    const MeanStd ms = mean_std(xs);
    res.width_estimate = ms.sd;
    res.stderr_width = ms.sd / std::sqrt(2.0 * static_cast<double>(n_particles));
    return res;
}

} // namespace wplab
