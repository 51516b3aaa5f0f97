#pragma once

// Stern-Gerlach at the outcome level. Each incoming packet is an eigenpacket
// of the spin component along some definite direction; the apparatus forces
// it into the up or down eigenpacket along its own axis with the standard
// spin-1/2 projection probability cos^2(alpha/2). The unknown direction is
// recovered from up/down abundance ratios across apparatus orientations by
// maximum likelihood on the sphere.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/rng.hpp"
#include "wplab/util.hpp"

namespace wplab {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double length() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double l = length();
        require(l > 0.0, Errc::invalid_argument, "cannot normalize zero vector");
        return {x / l, y / l, z / l};
    }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

namespace detail {

inline void check_angles(double theta, double phi) {
    require(theta >= 0.0 && theta <= kPi, Errc::invalid_argument,
            "theta must lie in [0, pi]");
    require(phi >= 0.0 && phi < 2.0 * kPi, Errc::invalid_argument,
            "phi must lie in [0, 2*pi)");
}

inline Vec3 sphere_unit(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
            std::cos(theta)};
}

inline void angles_from_unit(const Vec3& u, double& theta, double& phi) {
    theta = std::atan2(std::hypot(u.x, u.y), u.z);
    phi = std::atan2(u.y, u.x);
    if (phi < 0.0) phi += 2.0 * kPi;
    if (phi >= 2.0 * kPi) phi = 0.0;
}

} // namespace detail

struct SpinDirection {
    double theta = 0.0; // [0, pi]
    double phi = 0.0;   // [0, 2*pi)

    SpinDirection() = default;
    SpinDirection(double th, double ph) : theta(th), phi(ph) {
        detail::check_angles(th, ph);
    }

    Vec3 unit() const { return detail::sphere_unit(theta, phi); }

    static SpinDirection from_unit(const Vec3& v) {
        const Vec3 u = v.normalized();
        double th, ph;
        detail::angles_from_unit(u, th, ph);
        return SpinDirection(th, ph);
    }
};

struct ApparatusAxis {
    double theta = 0.0;
    double phi = 0.0;

    ApparatusAxis() = default;
    ApparatusAxis(double th, double ph) : theta(th), phi(ph) {
        detail::check_angles(th, ph);
    }

    Vec3 unit() const { return detail::sphere_unit(theta, phi); }
};

inline SpinDirection antipode(const SpinDirection& s) {
    return SpinDirection::from_unit(-s.unit());
}

// P(up) = cos^2(alpha/2) = (1 + s.a) / 2 for the angle alpha between the
// spin direction and the apparatus axis.
inline double up_probability(const SpinDirection& spin, const ApparatusAxis& axis) {
    const double c = spin.unit().dot(axis.unit());
    const double p = 0.5 * (1.0 + c);
    return std::min(1.0, std::max(0.0, p));
}

struct SgCounts {
    ApparatusAxis axis;
    std::int64_t n_up = 0;
    std::int64_t n_down = 0;

    std::int64_t total() const { return n_up + n_down; }
};

// n Bernoulli trials at one orientation. Each particle leaves as the up or
// down eigenpacket along `axis`; pass `outcomes` to receive that per-particle
// record (+1 up, -1 down).
inline SgCounts simulate_sg(const SpinDirection& spin, const ApparatusAxis& axis,
                            std::int64_t n, std::uint64_t rng_seed,
                            std::vector<std::int8_t>* outcomes = nullptr) {
    require(n >= 1, Errc::invalid_argument, "need at least one particle");
    const double p = up_probability(spin, axis);
    Philox4x32 rng(rng_seed);
    SgCounts counts;
    counts.axis = axis;
    if (outcomes) {
        outcomes->clear();
        outcomes->reserve(static_cast<std::size_t>(n));
    }
    for (std::int64_t i = 0; i < n; ++i) {
        const bool up = rng.bernoulli(p);
        if (up) ++counts.n_up;
        else ++counts.n_down;
        if (outcomes) outcomes->push_back(up ? 1 : -1);
    }
    return counts;
}

// Same experiment with one derived seed per particle, so trials can fan out
// across workers without changing the counts.
inline SgCounts sg_counts_parallel(const SpinDirection& spin, const ApparatusAxis& axis,
                                   std::int64_t n, std::uint64_t master_seed,
                                   std::string_view stream_label, int threads = 1) {
    require(n >= 1, Errc::invalid_argument, "need at least one particle");
    const double p = up_probability(spin, axis);
    const int lanes = std::max(1, threads);
    std::vector<std::int64_t> ups(static_cast<std::size_t>(lanes), 0);
    const std::int64_t chunk = (n + lanes - 1) / lanes;
    parallel_for(lanes, threads, [&](std::int64_t lane) {
        const std::int64_t lo = lane * chunk;
        const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
        std::int64_t mine = 0;
        for (std::int64_t i = lo; i < hi; ++i) {
            Philox4x32 rng(derive_seed(master_seed, stream_label, static_cast<std::uint64_t>(i)));
            if (rng.bernoulli(p)) ++mine;
        }
        ups[static_cast<std::size_t>(lane)] = mine;
    });
    SgCounts counts;
    counts.axis = axis;
    for (std::int64_t u : ups) counts.n_up += u;
    counts.n_down = n - counts.n_up;
    return counts;
}

inline SpinDirection post_measurement_spin(const ApparatusAxis& axis, int outcome) {
    require(outcome == 1 || outcome == -1, Errc::invalid_argument, "outcome must be +1 or -1");
    const SpinDirection along(axis.theta, axis.phi);
    return outcome == 1 ? along : antipode(along);
}

struct DirectionEstimate {
    SpinDirection estimate;
    double cone_halfangle_95 = 0.0; // radians
    double log_likelihood = 0.0;
};

namespace detail {

inline double sg_log_likelihood(const Vec3& s, std::span<const SgCounts> counts) {
    double ll = 0.0;
    for (const auto& c : counts) {
        double p = 0.5 * (1.0 + s.dot(c.axis.unit()));
        p = std::min(1.0, std::max(0.0, p));
        if (c.n_up > 0) {
            if (p <= 0.0) return -1e300;
            ll += static_cast<double>(c.n_up) * std::log(p);
        }
        if (c.n_down > 0) {
            if (p >= 1.0) return -1e300;
            ll += static_cast<double>(c.n_down) * std::log(1.0 - p);
        }
    }
    return ll;
}

// Axes identify the direction only if they span 3-space; otherwise the
// likelihood is invariant under reflection through the spanned plane.
inline bool axes_span_3space(std::span<const SgCounts> counts) {
    double m[3][3] = {};
    for (const auto& c : counts) {
        const Vec3 a = c.axis.unit();
        const double v[3] = {a.x, a.y, a.z};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] += v[i] * v[j];
    }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    const double scale = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    return det > 1e-9 * scale * scale * scale;
}

} // namespace detail

// Maximum-likelihood spin direction from abundance ratios: coarse 5-degree
// grid scan (ties resolved toward smaller theta, then smaller phi), then a
// shrinking local pattern search. The 95% cone comes from the observed
// Fisher information in tangent coordinates at the maximum, circumscribing
// the asymptotic confidence ellipse (chi^2_2 quantile, larger principal
// axis).
inline DirectionEstimate estimate_direction(std::span<const SgCounts> counts) {
    require(!counts.empty(), Errc::invalid_argument, "no counts given");
    for (const auto& c : counts)
        require(c.total() >= 1, Errc::invalid_argument, "each axis needs at least one count");
    require(detail::axes_span_3space(counts), Errc::degenerate_axes,
            "apparatus axes do not span 3-space; direction not identifiable");

    const double coarse = deg_to_rad(5.0);
    double best_theta = 0.0, best_phi = 0.0;
    double best_ll = -1e301;
    for (int it = 0; it <= 36; ++it) {
        for (int ip = 0; ip < 72; ++ip) {
            const double th = coarse * it;
            const double ph = coarse * ip;
            const double ll =
                detail::sg_log_likelihood(detail::sphere_unit(th, ph), counts);
            if (ll > best_ll) {
                best_ll = ll;
                best_theta = th;
                best_phi = ph;
            }
        }
    }

    double step = coarse;
    while (step > 1e-9) {
        bool moved = false;
        for (int dth = -1; dth <= 1; ++dth) {
            for (int dph = -1; dph <= 1; ++dph) {
                if (dth == 0 && dph == 0) continue;
                double th = best_theta + step * dth;
                double ph = best_phi + step * dph;
                if (th < 0.0 || th > kPi) continue;
                ph = std::fmod(ph + 2.0 * kPi, 2.0 * kPi);
                const double ll =
                    detail::sg_log_likelihood(detail::sphere_unit(th, ph), counts);
                if (ll > best_ll) {
                    best_ll = ll;
                    best_theta = th;
                    best_phi = ph;
                    moved = true;
                }
            }
        }
        if (!moved) step *= 0.5;
    }

    DirectionEstimate est;
    est.estimate = SpinDirection(best_theta, std::fmod(best_phi, 2.0 * kPi));
    est.log_likelihood = best_ll;

    // observed information in an orthonormal tangent basis at the maximum
    const Vec3 s_hat = est.estimate.unit();
    Vec3 ref = (std::abs(s_hat.z) < 0.9) ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 e1 = ref.cross(s_hat).normalized();
    const Vec3 e2 = s_hat.cross(e1);
    const auto f = [&](double t1, double t2) {
        const Vec3 v{s_hat.x + t1 * e1.x + t2 * e2.x, s_hat.y + t1 * e1.y + t2 * e2.y,
                     s_hat.z + t1 * e1.z + t2 * e2.z};
        return detail::sg_log_likelihood(v.normalized(), counts);
    };
    const double h = 1e-3;
    const double f0 = f(0, 0);
    const double i11 = -(f(h, 0) - 2.0 * f0 + f(-h, 0)) / (h * h);
    const double i22 = -(f(0, h) - 2.0 * f0 + f(0, -h)) / (h * h);
    const double i12 =
        -(f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
    const double mean = 0.5 * (i11 + i22);
    const double disc = std::sqrt(0.25 * (i11 - i22) * (i11 - i22) + i12 * i12);
    const double lambda_min = mean - disc;
    const double chi2_2_95 = 5.991464547107979;
    est.cone_halfangle_95 =
        (lambda_min > 0.0) ? std::sqrt(chi2_2_95 / lambda_min) : kPi;
    return est;
}

} // namespace wplab
