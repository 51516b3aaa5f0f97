#pragma once

// EPR joint-outcome laws and their Monte Carlo estimators.
//
//   P1(rA, rB | zeta) = (1 - rA rB cos zeta) / 4   coalesced singlet pairs
//   P2(rA, rB | zeta) = (1 - rA rB cos zeta / 3) / 4   fully separated pairs
//
// P1 violates the CHSH bound (S up to 2*sqrt(2)); P2 tops out at
// 2*sqrt(2)/3 and never violates. Splitting en route is modeled as a
// Bernoulli mixture: with probability p_split = 1 - exp(-mu * L) the pair
// follows P2, else P1. The exponential attenuation form is a declared
// one-parameter convention -- the splitting microphysics fixes no law.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/rng.hpp"
#include "wplab/util.hpp"

namespace wplab {

struct EprModel {
    enum class Kind { p1, p2, mixture };

    Kind kind = Kind::p1;
    double p_split = 0.0; // mixture only: probability the pair has split

    static EprModel p1() { return {Kind::p1, 0.0}; }
    static EprModel p2() { return {Kind::p2, 1.0}; }
    static EprModel mixture(double p_split) {
        require(p_split >= 0.0 && p_split <= 1.0, Errc::invalid_argument,
                "p_split must lie in [0, 1]");
        return {Kind::mixture, p_split};
    }

    // Weight of the P2 component: 0 for P1, 1 for P2, p_split for mixtures.
    double separated_weight() const {
        switch (kind) {
        case Kind::p1: return 0.0;
        case Kind::p2: return 1.0;
        case Kind::mixture: return p_split;
        }
        return 0.0;
    }

    std::string name() const {
        switch (kind) {
        case Kind::p1: return "P1";
        case Kind::p2: return "P2";
        case Kind::mixture: return "Mixture(" + format_double(p_split) + ")";
        }
        return "?";
    }
};

struct PairOutcome {
    int r_a = 1; // +1 spin up, -1 spin down at apparatus A
    int r_b = 1;
};

struct ChshSettings {
    double a = 0.0; // apparatus axis angles in a common plane, radians
    double a_prime = 0.0;
    double b = 0.0;
    double b_prime = 0.0;
};

// Per-setting sufficient statistics for E(zeta).
struct CorrelationRecord {
    double zeta = 0.0;
    std::int64_t n = 0;
    std::int64_t counts_pp = 0;
    std::int64_t counts_pm = 0;
    std::int64_t counts_mp = 0;
    std::int64_t counts_mm = 0;
    double e_hat = 0.0;
    double stderr_e = 0.0;
};

namespace detail {

inline void check_outcome(int r) {
    require(r == 1 || r == -1, Errc::invalid_argument, "outcome must be +1 or -1");
}

} // namespace detail

inline double joint_probability(const EprModel& model, int r_a, int r_b, double zeta) {
    detail::check_outcome(r_a);
    detail::check_outcome(r_b);
    const double p = model.separated_weight();
    const double corr = (1.0 - p) + p / 3.0; // cos-coefficient of the mixture
    return 0.25 * (1.0 - static_cast<double>(r_a * r_b) * corr * std::cos(zeta));
}

// E(zeta) = sum_{rA,rB} rA rB P(rA, rB | zeta), in closed form.
inline double correlation_E(const EprModel& model, double zeta) {
    const double p = model.separated_weight();
    return -((1.0 - p) + p / 3.0) * std::cos(zeta);
}

inline PairOutcome sample_pair_with(const EprModel& model, double zeta, Philox4x32& rng) {
    const double u = rng.uniform01();
    static constexpr std::array<PairOutcome, 4> outcomes{
        PairOutcome{+1, +1}, PairOutcome{+1, -1}, PairOutcome{-1, +1}, PairOutcome{-1, -1}};
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        acc += joint_probability(model, outcomes[static_cast<std::size_t>(i)].r_a,
                                 outcomes[static_cast<std::size_t>(i)].r_b, zeta);
        if (u < acc) return outcomes[static_cast<std::size_t>(i)];
    }
    return outcomes[3];
}

inline PairOutcome sample_pair(const EprModel& model, double zeta, std::uint64_t rng_seed) {
    Philox4x32 rng(rng_seed);
    return sample_pair_with(model, zeta, rng);
}

// n pairs at one angle, per-trial seeds derived from (master, label, trial)
// so counts are independent of scheduling.
inline CorrelationRecord measure_correlation(const EprModel& model, double zeta,
                                             std::int64_t n, std::uint64_t master_seed,
                                             const std::string& stream_label,
                                             int threads = 1) {
    require(n >= 1, Errc::invalid_argument, "need at least one pair");
    CorrelationRecord rec;
    rec.zeta = zeta;
    rec.n = n;

    const int lanes = std::max(1, threads);
    std::vector<std::array<std::int64_t, 4>> partial(
        static_cast<std::size_t>(lanes), std::array<std::int64_t, 4>{0, 0, 0, 0});
    const std::int64_t chunk = (n + lanes - 1) / lanes;
    parallel_for(lanes, threads, [&](std::int64_t lane) {
        const std::int64_t lo = lane * chunk;
        const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
        auto& mine = partial[static_cast<std::size_t>(lane)];
        for (std::int64_t i = lo; i < hi; ++i) {
            Philox4x32 rng(
                derive_seed(master_seed, stream_label, static_cast<std::uint64_t>(i)));
            const PairOutcome o = sample_pair_with(model, zeta, rng);
            const int idx = (o.r_a == 1 ? 0 : 2) + (o.r_b == 1 ? 0 : 1);
            ++mine[static_cast<std::size_t>(idx)];
        }
    });
    for (const auto& part : partial) {
        rec.counts_pp += part[0];
        rec.counts_pm += part[1];
        rec.counts_mp += part[2];
        rec.counts_mm += part[3];
    }

    const double nn = static_cast<double>(n);
    rec.e_hat = static_cast<double>(rec.counts_pp + rec.counts_mm - rec.counts_pm -
                                    rec.counts_mp) /
                nn;
    rec.stderr_e = std::sqrt(std::max(0.0, 1.0 - rec.e_hat * rec.e_hat) / nn);
    return rec;
}

struct ChshResult {
    ChshSettings settings;
    std::array<CorrelationRecord, 4> records; // (a,b), (a,b'), (a',b), (a',b')
    double s_hat = 0.0;
    double stderr_s = 0.0;

    bool violates_bell() const { return s_hat > 2.0; }
};

// Four-setting CHSH estimate: S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.
inline ChshResult chsh(const EprModel& model, const ChshSettings& settings,
                       std::int64_t n_per_setting, std::uint64_t master_seed,
                       int threads = 1) {
    require(n_per_setting >= 100, Errc::invalid_argument,
            "need at least 100 pairs per setting");
    ChshResult res;
    res.settings = settings;
    const std::array<double, 4> zetas{settings.b - settings.a, settings.b_prime - settings.a,
                                      settings.b - settings.a_prime,
                                      settings.b_prime - settings.a_prime};
    static constexpr std::array<const char*, 4> labels{"chsh.ab", "chsh.ab'", "chsh.a'b",
                                                       "chsh.a'b'"};
    for (int i = 0; i < 4; ++i)
        res.records[static_cast<std::size_t>(i)] =
            measure_correlation(model, zetas[static_cast<std::size_t>(i)], n_per_setting,
                                master_seed, labels[static_cast<std::size_t>(i)], threads);

    const auto& r = res.records;
    res.s_hat = std::abs(r[0].e_hat - r[1].e_hat + r[2].e_hat + r[3].e_hat);
    res.stderr_s = std::sqrt(r[0].stderr_e * r[0].stderr_e + r[1].stderr_e * r[1].stderr_e +
                             r[2].stderr_e * r[2].stderr_e + r[3].stderr_e * r[3].stderr_e);
    return res;
}

// Splitting probability after traversing `distance` of material with
// splitting rate mu: p = 1 - exp(-mu * distance). mu = 0 recovers the
// Copenhagen picture (no pre-measurement splitting).
inline double p_split_from_material(double mu, double distance) {
    require(mu >= 0.0 && std::isfinite(mu), Errc::invalid_argument, "mu must be >= 0");
    require(distance >= 0.0 && std::isfinite(distance), Errc::invalid_argument,
            "distance must be >= 0");
    return 1.0 - std::exp(-mu * distance);
}

struct SweepRow {
    double distance = 0.0;
    double p_split = 0.0;
    double e_hat = 0.0;
    double stderr_e = 0.0;
    double e_copenhagen = 0.0; // analytic P1 value, splitting never happens
};

// Correlation vs. amount of interposed material. The realist column decays
// toward the P2 limit; the Copenhagen column stays at the P1 value.
inline std::vector<SweepRow> correlation_sweep(double mu, const std::vector<double>& distances,
                                               double zeta, std::int64_t n,
                                               std::uint64_t master_seed, int threads = 1) {
    require(!distances.empty(), Errc::invalid_argument, "no distances given");
    for (std::size_t i = 1; i < distances.size(); ++i)
        require(distances[i - 1] <= distances[i], Errc::invalid_argument,
                "distances must be sorted ascending");

    std::vector<SweepRow> rows;
    rows.reserve(distances.size());
    for (std::size_t i = 0; i < distances.size(); ++i) {
        SweepRow row;
        row.distance = distances[i];
        row.p_split = p_split_from_material(mu, distances[i]);
        const CorrelationRecord rec =
            measure_correlation(EprModel::mixture(row.p_split), zeta, n, master_seed,
                                "sweep." + std::to_string(i), threads);
        row.e_hat = rec.e_hat;
        row.stderr_e = rec.stderr_e;
        row.e_copenhagen = correlation_E(EprModel::p1(), zeta);
        rows.push_back(row);
    }
    return rows;
}

} // namespace wplab
