#pragma once

// Bose-Einstein / Fermi-Dirac statistics from the coalescence postulates via
// Einstein balance relations: single-quantum transfers between modes with
// rates n_from (1 + n_to) (bose bunching) or n_from (1 - n_to) (fermi
// blocking) times a Metropolis energy factor. The chain conserves the total
// quanta exactly and is reversible with respect to the canonical weight
// exp(-beta * E), so time averages reproduce the textbook occupancies.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/rng.hpp"

namespace wplab {

enum class StatKind { bose, fermi };

inline const char* stat_kind_name(StatKind k) { return k == StatKind::bose ? "bose" : "fermi"; }

struct ModeSpectrum {
    std::vector<double> energies;
    double beta = 1.0;               // inverse temperature
    double chemical_potential = 0.0; // used by the analytic oracle only

    ModeSpectrum(std::vector<double> e, double b, double mu = 0.0)
        : energies(std::move(e)), beta(b), chemical_potential(mu) {
        require(!energies.empty(), Errc::invalid_argument, "spectrum needs modes");
        for (double x : energies)
            require(std::isfinite(x), Errc::invalid_argument, "mode energies must be finite");
        require(b > 0.0 && std::isfinite(b), Errc::invalid_argument, "beta must be positive");
    }

    int n_modes() const { return static_cast<int>(energies.size()); }
};

struct OccupationState {
    std::vector<int> occupations;
    StatKind kind = StatKind::bose;

    OccupationState(std::vector<int> occ, StatKind k) : occupations(std::move(occ)), kind(k) {
        for (int n : occupations) {
            require(n >= 0, Errc::invalid_argument, "occupations must be >= 0");
            if (kind == StatKind::fermi)
                require(n <= 1, Errc::invalid_argument, "fermi occupations must be 0 or 1");
        }
    }

    int total() const {
        int t = 0;
        for (int n : occupations) t += n;
        return t;
    }
};

// Rate of moving one quantum mode_from -> mode_to. Zero when exclusion
// blocks the move; EmptySource when there is nothing to move.
inline double transfer_rate(const OccupationState& state, int mode_from, int mode_to,
                            const ModeSpectrum& spectrum) {
    const int k = spectrum.n_modes();
    require(mode_from >= 0 && mode_from < k && mode_to >= 0 && mode_to < k,
            Errc::invalid_argument, "mode index out of range");
    require(mode_from != mode_to, Errc::invalid_argument, "source and target must differ");
    require(static_cast<int>(state.occupations.size()) == k, Errc::invalid_argument,
            "state size does not match spectrum");
    const int n_from = state.occupations[static_cast<std::size_t>(mode_from)];
    require(n_from >= 1, Errc::empty_source, "no quantum in source mode");

    const int n_to = state.occupations[static_cast<std::size_t>(mode_to)];
    const double d_e = spectrum.energies[static_cast<std::size_t>(mode_to)] -
                       spectrum.energies[static_cast<std::size_t>(mode_from)];
    const double boltz = std::exp(-spectrum.beta * std::max(0.0, d_e));
    if (state.kind == StatKind::fermi)
        return static_cast<double>(n_from) * static_cast<double>(1 - n_to) * boltz;
    return static_cast<double>(n_from) * static_cast<double>(1 + n_to) * boltz;
}

struct BalanceResult {
    std::vector<double> mean_occupation;
    std::vector<double> stderr_occupation; // batch-means standard error
    long n_steps = 0;
    long burn_in = 0;
    double acceptance_rate = 0.0;
};

namespace detail {

struct NoopObserver {
    void operator()(long, const OccupationState&) const {}
};

} // namespace detail

// Balance-relation chain: per step, propose an ordered mode pair uniformly
// and accept the single-quantum transfer with probability rate / M, where M
// bounds every rate. The observer (if any) sees the state after every step.
template <typename Observer = detail::NoopObserver>
BalanceResult simulate_balance(const ModeSpectrum& spectrum, StatKind kind, int total_quanta,
                               long n_steps, long burn_in, std::uint64_t rng_seed,
                               Observer&& observe = Observer{}) {
    const int k = spectrum.n_modes();
    require(total_quanta >= 1, Errc::invalid_argument, "need at least one quantum");
    if (kind == StatKind::fermi)
        require(total_quanta <= k, Errc::overfilled,
                "fermi: total_quanta " + std::to_string(total_quanta) + " > " +
                    std::to_string(k) + " modes");
    require(n_steps > burn_in && burn_in >= 0, Errc::invalid_argument,
            "need n_steps > burn_in >= 0");

    // deterministic initial fill, round-robin over modes
    std::vector<int> occ(static_cast<std::size_t>(k), 0);
    for (int q = 0; q < total_quanta; ++q) ++occ[static_cast<std::size_t>(q % k)];
    OccupationState state(std::move(occ), kind);

    // Constant bound on every transfer rate: n_from (1 + n_to) with
    // n_from + n_to <= N peaks at floor((N+1)^2 / 4); fermi rates are <= 1.
    const double rate_bound =
        (kind == StatKind::bose)
            ? std::floor(0.25 * static_cast<double>(total_quanta + 1) *
                         static_cast<double>(total_quanta + 1))
            : 1.0;

    Philox4x32 rng(rng_seed);
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    const long record_steps = n_steps - burn_in;
    const int n_batches = 64;
    const long batch_len = std::max<long>(1, record_steps / n_batches);
    std::vector<std::vector<double>> batch_means; // one vector of K means per batch
    std::vector<double> batch_acc(static_cast<std::size_t>(k), 0.0);
    long in_batch = 0;
    long accepted = 0;

    for (long s = 0; s < n_steps; ++s) {
        if (k > 1) {
            const int from = static_cast<int>(rng.uniform01() * k);
            int to = static_cast<int>(rng.uniform01() * (k - 1));
            if (to >= from) ++to;
            const int n_from = state.occupations[static_cast<std::size_t>(from)];
            if (n_from >= 1) {
                const double rate = transfer_rate(state, from, to, spectrum);
                if (rng.uniform01() * rate_bound < rate) {
                    --state.occupations[static_cast<std::size_t>(from)];
                    ++state.occupations[static_cast<std::size_t>(to)];
                    ++accepted;
                    if (kind == StatKind::fermi &&
                        state.occupations[static_cast<std::size_t>(to)] > 1)
                        raise(Errc::module_error, "fermi exclusion violated");
                }
            }
        }
        observe(s, state);
        if (s >= burn_in) {
            for (int m = 0; m < k; ++m) {
                sums[static_cast<std::size_t>(m)] +=
                    state.occupations[static_cast<std::size_t>(m)];
                batch_acc[static_cast<std::size_t>(m)] +=
                    state.occupations[static_cast<std::size_t>(m)];
            }
            if (++in_batch == batch_len) {
                for (auto& v : batch_acc) v /= static_cast<double>(batch_len);
                batch_means.push_back(batch_acc);
                std::fill(batch_acc.begin(), batch_acc.end(), 0.0);
                in_batch = 0;
            }
        }
    }
    require(state.total() == total_quanta, Errc::module_error,
            "quanta conservation broken in chain");

    BalanceResult res;
    res.n_steps = n_steps;
    res.burn_in = burn_in;
    res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n_steps);
    res.mean_occupation.resize(static_cast<std::size_t>(k));
    res.stderr_occupation.assign(static_cast<std::size_t>(k), 0.0);
    for (int m = 0; m < k; ++m)
        res.mean_occupation[static_cast<std::size_t>(m)] =
            sums[static_cast<std::size_t>(m)] / static_cast<double>(record_steps);
    const std::size_t nb = batch_means.size();
    if (nb >= 2) {
        for (int m = 0; m < k; ++m) {
            double mean = 0.0;
            for (const auto& b : batch_means) mean += b[static_cast<std::size_t>(m)];
            mean /= static_cast<double>(nb);
            double var = 0.0;
            for (const auto& b : batch_means) {
                const double d = b[static_cast<std::size_t>(m)] - mean;
                var += d * d;
            }
            var /= static_cast<double>(nb - 1);
            res.stderr_occupation[static_cast<std::size_t>(m)] =
                std::sqrt(var / static_cast<double>(nb));
        }
    }
    return res;
}

// Grand-canonical occupancy oracle: 1 / (exp(beta (e - mu)) -+ 1).
inline double analytic_occupancy(StatKind kind, double beta, double energy, double mu) {
    require(beta > 0.0 && std::isfinite(beta), Errc::invalid_argument, "beta must be positive");
    if (kind == StatKind::bose)
        require(energy > mu, Errc::divergent_occupancy,
                "bose occupancy diverges for energy <= mu");
    const double x = std::exp(beta * (energy - mu));
    return (kind == StatKind::bose) ? 1.0 / (x - 1.0) : 1.0 / (x + 1.0);
}

// Chemical potential such that the grand-canonical total occupancy matches
// `target_total`. Monotone in mu, solved by bisection to 1e-10.
inline double fit_chemical_potential(StatKind kind, const ModeSpectrum& spectrum,
                                     double target_total) {
    require(target_total > 0.0, Errc::invalid_argument, "target total must be positive");
    if (kind == StatKind::fermi)
        require(target_total < static_cast<double>(spectrum.n_modes()), Errc::overfilled,
                "fermi total must be below the number of modes");

    double e_min = spectrum.energies.front();
    for (double e : spectrum.energies) e_min = std::min(e_min, e);

    const auto total_at = [&](double mu) {
        double t = 0.0;
        for (double e : spectrum.energies)
            t += analytic_occupancy(kind, spectrum.beta, e, mu);
        return t;
    };

    double hi, lo;
    if (kind == StatKind::bose) {
        double delta = 1.0;
        while (total_at(e_min - delta) < target_total) {
            delta *= 0.5;
            require(delta > 1e-300, Errc::module_error, "mu bracketing failed");
        }
        hi = e_min - delta;
        double off = std::max(1.0, delta * 2.0);
        while (total_at(e_min - off) > target_total) off *= 2.0;
        lo = e_min - off;
    } else {
        hi = e_min + 1.0;
        while (total_at(hi) < target_total) hi += std::max(1.0, std::abs(hi));
        lo = e_min - 1.0;
        while (total_at(lo) > target_total) lo -= std::max(1.0, std::abs(lo));
    }

    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (total_at(mid) < target_total) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace wplab
