#pragma once

// Deterministic Schroedinger evolution: symmetric (Strang) split-step with
// the kinetic factor applied exactly in the spectral basis. Periodic
// boundaries are implied by the spectral method; a runtime monitor records
// when the packet starts touching the box edges.

#include <cmath>
#include <string>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/fft.hpp"
#include "wplab/wavepacket.hpp"

namespace wplab {

struct Potential {
    enum class Kind { free, harmonic, barrier, tabulated };

    Kind kind = Kind::free;
    double omega = 0.0;          // harmonic
    double center = 0.0;         // harmonic
    double height = 0.0;         // barrier
    double left = 0.0;           // barrier
    double right = 0.0;          // barrier
    std::vector<double> values;  // tabulated, one per grid node

    static Potential free_space() { return {}; }

    static Potential harmonic(double omega, double center = 0.0) {
        require(std::isfinite(omega) && omega >= 0.0, Errc::invalid_argument,
                "harmonic omega must be finite and >= 0");
        Potential v;
        v.kind = Kind::harmonic;
        v.omega = omega;
        v.center = center;
        return v;
    }

    static Potential barrier(double height, double left, double right) {
        require(std::isfinite(height), Errc::invalid_argument, "barrier height must be finite");
        require(left < right, Errc::invalid_argument, "barrier needs left < right");
        Potential v;
        v.kind = Kind::barrier;
        v.height = height;
        v.left = left;
        v.right = right;
        return v;
    }

    static Potential tabulated(std::vector<double> values) {
        for (double x : values)
            require(std::isfinite(x), Errc::invalid_argument, "tabulated potential must be finite");
        Potential v;
        v.kind = Kind::tabulated;
        v.values = std::move(values);
        return v;
    }

    // Node values of V(x) for a packet of the given mass.
    std::vector<double> evaluate(const Grid1D& grid, double mass) const {
        std::vector<double> out(static_cast<std::size_t>(grid.n_points), 0.0);
        switch (kind) {
        case Kind::free:
            break;
        case Kind::harmonic:
            for (int i = 0; i < grid.n_points; ++i) {
                const double d = grid.x(i) - center;
                out[static_cast<std::size_t>(i)] = 0.5 * mass * omega * omega * d * d;
            }
            break;
        case Kind::barrier:
            for (int i = 0; i < grid.n_points; ++i) {
                const double x = grid.x(i);
                out[static_cast<std::size_t>(i)] = (x >= left && x <= right) ? height : 0.0;
            }
            break;
        case Kind::tabulated:
            require(static_cast<int>(values.size()) == grid.n_points, Errc::invalid_argument,
                    "tabulated potential length != grid n_points");
            out = values;
            break;
        }
        return out;
    }
};

struct EvolutionConfig {
    double dt = 0.0;
    long n_steps = 0;
    long trace_stride = 0; // 0: record initial and final state only

    EvolutionConfig(double dt_, long n_steps_, long stride = 0)
        : dt(dt_), n_steps(n_steps_), trace_stride(stride) {
        require(std::isfinite(dt) && dt > 0.0, Errc::invalid_argument, "dt must be positive");
        require(n_steps >= 0, Errc::invalid_argument, "n_steps must be >= 0");
        require(trace_stride >= 0, Errc::invalid_argument, "trace_stride must be >= 0");
    }
};

namespace detail {

struct StepPhases {
    std::vector<cdouble> half_potential; // exp(-i V dt / 2)
    std::vector<cdouble> kinetic;        // exp(-i k^2 dt / (2 m))
};

inline StepPhases make_step_phases(const Grid1D& grid, const std::vector<double>& v,
                                   double mass, double dt) {
    StepPhases p;
    p.half_potential.resize(static_cast<std::size_t>(grid.n_points));
    p.kinetic.resize(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i)
        p.half_potential[static_cast<std::size_t>(i)] =
            std::polar(1.0, -0.5 * v[static_cast<std::size_t>(i)] * dt);
    for (int j = 0; j < grid.n_points; ++j) {
        const double k = grid.k(j);
        p.kinetic[static_cast<std::size_t>(j)] =
            std::polar(1.0, -k * k * dt / (2.0 * mass));
    }
    return p;
}

// One Strang step with precomputed phases. Throws NormDrift if the norm
// moves by more than 1e-9 (dt too large for the guard, or a broken field).
inline void step_with_phases(Wavepacket& wp, const StepPhases& ph, double dt) {
    const double norm_before = wp.norm();
    for (std::size_t i = 0; i < wp.amplitudes.size(); ++i)
        wp.amplitudes[i] *= ph.half_potential[i];
    fft_inplace(wp.amplitudes, false);
    for (std::size_t j = 0; j < wp.amplitudes.size(); ++j)
        wp.amplitudes[j] *= ph.kinetic[j];
    fft_inplace(wp.amplitudes, true);
    for (std::size_t i = 0; i < wp.amplitudes.size(); ++i)
        wp.amplitudes[i] *= ph.half_potential[i];
    wp.time += dt;
    const double drift = std::abs(wp.norm() - norm_before);
    require(drift <= 1e-9, Errc::norm_drift,
            "norm changed by " + std::to_string(drift) + " in one step");
}

} // namespace detail

// One symmetric split step: half potential, full kinetic, half potential.
// dt may be negative (the exact inverse of the forward step).
inline Wavepacket step(const Wavepacket& wp, const Potential& v, double dt) {
    require(std::isfinite(dt) && dt != 0.0, Errc::invalid_argument, "dt must be nonzero");
    check_normalized(wp);
    const std::vector<double> vals = v.evaluate(wp.grid, wp.mass);
    const detail::StepPhases ph = detail::make_step_phases(wp.grid, vals, wp.mass, dt);
    Wavepacket out = wp;
    detail::step_with_phases(out, ph, dt);
    return out;
}

struct TracePoint {
    double time = 0.0;
    double mean_x = 0.0;
    double delta_x = 0.0;
    double delta_p = 0.0;
    double norm = 0.0;
};

struct EvolveResult {
    Wavepacket state;
    std::vector<TracePoint> trace;
    bool boundary_leak = false;  // outer-band mass exceeded 1e-8 at some step
    long boundary_leak_step = -1;
};

inline TracePoint trace_point(const Wavepacket& wp) {
    const Moments m = moments(wp);
    return {wp.time, m.mean_x, m.delta_x, m.delta_p, wp.norm()};
}

inline EvolveResult evolve(const Wavepacket& wp, const Potential& v,
                           const EvolutionConfig& cfg) {
    check_normalized(wp);
    EvolveResult res;
    res.state = wp;
    res.trace.push_back(trace_point(res.state));

    const std::vector<double> vals = v.evaluate(wp.grid, wp.mass);
    const detail::StepPhases ph = detail::make_step_phases(wp.grid, vals, wp.mass, cfg.dt);

    for (long s = 0; s < cfg.n_steps; ++s) {
        try {
            detail::step_with_phases(res.state, ph, cfg.dt);
        } catch (const Error& e) {
            raise(e.code(), "at step " + std::to_string(s) + ": " + e.what());
        }
        if (!res.boundary_leak && boundary_tail_mass(res.state) > 1e-8) {
            res.boundary_leak = true;
            res.boundary_leak_step = s;
        }
        const bool last = (s + 1 == cfg.n_steps);
        if (last || (cfg.trace_stride > 0 && (s + 1) % cfg.trace_stride == 0))
            res.trace.push_back(trace_point(res.state));
    }
    return res;
}

// Closed-form width of a freely spreading Gaussian:
// sigma(t) = sigma0 * sqrt(1 + (t / (2 m sigma0^2))^2).
inline double analytic_gaussian_width(double sigma0, double mass, double t) {
    require(sigma0 > 0.0, Errc::invalid_argument, "sigma0 must be positive");
    require(mass > 0.0, Errc::invalid_argument, "mass must be positive");
    const double r = t / (2.0 * mass * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + r * r);
}

} // namespace wplab
