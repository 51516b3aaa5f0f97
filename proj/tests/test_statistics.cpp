#include <doctest.h>

#include <map>

#include "test_util.hpp"
#include "wplab/statistics.hpp"

using namespace wplab;

#define CHECK_ERRC(expr, errc)                                                                     \
    do {                                                                                           \
        try {                                                                                      \
            (void)(expr);                                                                          \
            FAIL("expected an error");                                                             \
        } catch (const wplab::Error& e) {                                                          \
            CHECK(e.code() == (errc));                                                             \
        }                                                                                          \
    } while (0)

namespace {

// all occupation configurations of `total` quanta over k modes
void enumerate_states(int k, int total, bool fermi, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        if (total == 0) out.push_back(cur);
        return;
    }
    const int cap = fermi ? std::min(1, total) : total;
    for (int q = 0; q <= cap; ++q) {
        cur.push_back(q);
        enumerate_states(k, total - q, fermi, cur, out);
        cur.pop_back();
    }
}

double state_energy(const std::vector<int>& occ, const std::vector<double>& e) {
    double sum = 0.0;
    for (std::size_t i = 0; i < occ.size(); ++i) sum += occ[i] * e[i];
    return sum;
}

} // namespace

TEST_CASE("transfer rates at the anchor points") {
    const ModeSpectrum spec({0.0, 0.0, 0.0}, 1.0);

    // exclusion: a fermi move into an occupied mode has rate zero
    const OccupationState f({1, 1, 0}, StatKind::fermi);
    CHECK(transfer_rate(f, 0, 1, spec) == 0.0);
    CHECK(transfer_rate(f, 0, 2, spec) == 1.0);

    // no enhancement, no energy factor: rate = n_from
    const OccupationState b({4, 0, 0}, StatKind::bose);
    CHECK(transfer_rate(b, 0, 1, spec) == 4.0);

    // bose enhancement: (1 + 3) : (1 + 0) = 4 : 1 at equal energies
    const OccupationState b2({2, 3, 0}, StatKind::bose);
    CHECK(transfer_rate(b2, 0, 1, spec) / transfer_rate(b2, 0, 2, spec) ==
          doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("rate preconditions") {
    const ModeSpectrum spec({0.0, 0.5}, 1.0);
    const OccupationState s({0, 2}, StatKind::bose);
    CHECK_ERRC(transfer_rate(s, 0, 1, spec), Errc::empty_source);
    CHECK_ERRC(transfer_rate(s, 1, 1, spec), Errc::invalid_argument);
    CHECK_ERRC(transfer_rate(s, 1, 5, spec), Errc::invalid_argument);
    CHECK_ERRC(OccupationState({0, 2}, StatKind::fermi), Errc::invalid_argument);
    CHECK_ERRC(ModeSpectrum({}, 1.0), Errc::invalid_argument);
    CHECK_ERRC(ModeSpectrum({1.0}, -2.0), Errc::invalid_argument);
}

TEST_CASE("analytic occupancies") {
    CHECK(analytic_occupancy(StatKind::bose, 1.0, 1.0, 0.0) ==
          doctest::Approx(0.5819767068693265).epsilon(1e-12)); // 1/(e-1)
    CHECK(analytic_occupancy(StatKind::fermi, 1.0, 1.0, 1.0) ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK(analytic_occupancy(StatKind::fermi, 1.0, 1.0, 0.0) ==
          doctest::Approx(0.2689414213699951).epsilon(1e-12)); // 1/(e+1)
    CHECK_ERRC(analytic_occupancy(StatKind::bose, 1.0, 1.0, 1.5), Errc::divergent_occupancy);
}

TEST_CASE("chain preconditions") {
    const ModeSpectrum spec({0.0, 0.5, 1.0}, 1.0);
    CHECK_ERRC(simulate_balance(spec, StatKind::fermi, 4, 1000, 10, 1), Errc::overfilled);
    CHECK_ERRC(simulate_balance(spec, StatKind::bose, 2, 10, 10, 1), Errc::invalid_argument);
    CHECK_ERRC(fit_chemical_potential(StatKind::fermi, spec, 3.0), Errc::overfilled);
}

TEST_CASE("a single mode has nowhere to move") {
    const ModeSpectrum spec({0.3}, 2.0);
    bool constant = true;
    const BalanceResult res = simulate_balance(
        spec, StatKind::bose, 5, 2000, 100, 9,
        [&](long, const OccupationState& s) { constant = constant && (s.occupations[0] == 5); });
    CHECK(constant);
    CHECK(res.mean_occupation[0] == 5.0);
}

TEST_CASE("balance rates satisfy detailed balance against the canonical weight") {
    const std::vector<double> e{0.0, 0.7, 1.1};
    const double beta = 1.3;
    const ModeSpectrum spec(e, beta);

    for (const bool fermi : {false, true}) {
        std::vector<std::vector<int>> states;
        std::vector<int> cur;
        enumerate_states(3, 2, fermi, cur, states);
        REQUIRE(states.size() == (fermi ? 3u : 6u));

        int checked = 0;
        for (const auto& s : states) {
            for (int from = 0; from < 3; ++from) {
                for (int to = 0; to < 3; ++to) {
                    if (from == to || s[(std::size_t)from] == 0) continue;
                    std::vector<int> t = s;
                    --t[(std::size_t)from];
                    ++t[(std::size_t)to];
                    if (fermi && t[(std::size_t)to] > 1) continue;
                    const StatKind kind = fermi ? StatKind::fermi : StatKind::bose;
                    const double fwd = transfer_rate(OccupationState(s, kind), from, to, spec);
                    const double bwd = transfer_rate(OccupationState(t, kind), to, from, spec);
                    const double lhs = fwd * std::exp(-beta * state_energy(s, e));
                    const double rhs = bwd * std::exp(-beta * state_energy(t, e));
                    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
                    ++checked;
                }
            }
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("chain visits states with the canonical frequencies (3 modes, 2 quanta)") {
    const std::vector<double> e{0.0, 0.7, 1.1};
    const double beta = 1.3;
    const ModeSpectrum spec(e, beta);

    for (const bool fermi : {false, true}) {
        const StatKind kind = fermi ? StatKind::fermi : StatKind::bose;
        std::vector<std::vector<int>> states;
        std::vector<int> cur;
        enumerate_states(3, 2, fermi, cur, states);

        std::map<std::vector<int>, double> canonical;
        double z = 0.0;
        for (const auto& s : states) {
            const double w = std::exp(-beta * state_energy(s, e));
            canonical[s] = w;
            z += w;
        }
        for (auto& [s, w] : canonical) w /= z;

        const long steps = 1000000, burn = 50000;
        std::map<std::vector<int>, long> visits;
        simulate_balance(spec, kind, 2, steps, burn, 4242,
                         [&](long step, const OccupationState& s) {
                             if (step >= burn) ++visits[s.occupations];
                         });

        double tv = 0.0;
        for (const auto& [s, p] : canonical) {
            const double emp = double(visits[s]) / double(steps - burn);
            tv += std::abs(emp - p);
        }
        tv *= 0.5;
        CHECK(tv < 0.01);
    }
}

TEST_CASE("conservation and exclusion hold along the whole trajectory") {
    const ModeSpectrum spec({0.0, 0.5, 1.0, 1.5, 2.0}, 0.8);
    bool conserved = true, excluded = true;
    simulate_balance(spec, StatKind::fermi, 3, 1000000, 0, 31,
                     [&](long, const OccupationState& s) {
                         int total = 0;
                         for (int n : s.occupations) {
                             total += n;
                             excluded = excluded && (n <= 1);
                         }
                         conserved = conserved && (total == 3);
                     });
    CHECK(conserved);
    CHECK(excluded);
}

TEST_CASE("bose bunching: occupation variance exceeds the fermi one") {
    // equal energies, 4 modes, 2 quanta; configurational values are 0.45
    // (bose) vs 0.25 (fermi) for every mode
    const ModeSpectrum spec({1.0, 1.0, 1.0, 1.0}, 1.0);
    double var_bose = 0.0, var_fermi = 0.0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
        for (const bool fermi : {false, true}) {
            double s1 = 0.0, s2 = 0.0;
            long n = 0;
            simulate_balance(spec, fermi ? StatKind::fermi : StatKind::bose, 2, 20000, 2000,
                             derive_seed(808, fermi ? "var.f" : "var.b", (std::uint64_t)r),
                             [&](long step, const OccupationState& s) {
                                 if (step < 2000) return;
                                 s1 += s.occupations[0];
                                 s2 += double(s.occupations[0]) * s.occupations[0];
                                 ++n;
                             });
            const double var = s2 / n - (s1 / n) * (s1 / n);
            (fermi ? var_fermi : var_bose) += var / reps;
        }
    }
    CHECK(var_bose > var_fermi + 0.1);
    CHECK(var_bose == doctest::Approx(0.45).epsilon(0.1));
    CHECK(var_fermi == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("ten-mode chains reproduce the grand-canonical oracles") {
    std::vector<double> energies;
    for (int i = 0; i < 10; ++i) energies.push_back(0.5 * i);

    // parameters sit in the regime where canonical and grand-canonical
    // occupancies agree well below the chain's resolution
    {
        const ModeSpectrum spec(energies, 0.025);
        const BalanceResult res = simulate_balance(spec, StatKind::bose, 6, 4000000, 200000,
                                                   derive_seed(42, "acc9.bose", 0));
        const double mu = fit_chemical_potential(StatKind::bose, spec, 6.0);
        for (int m = 0; m < 10; ++m) {
            const double oracle = analytic_occupancy(StatKind::bose, spec.beta, energies[(std::size_t)m], mu);
            CHECK(std::abs(res.mean_occupation[(std::size_t)m] - oracle) <
                  3.0 * res.stderr_occupation[(std::size_t)m]);
        }
    }
    {
        const ModeSpectrum spec(energies, 0.05);
        const BalanceResult res = simulate_balance(spec, StatKind::fermi, 5, 200000, 10000,
                                                   derive_seed(42, "acc9.fermi", 0));
        const double mu = fit_chemical_potential(StatKind::fermi, spec, 5.0);
        for (int m = 0; m < 10; ++m) {
            const double oracle = analytic_occupancy(StatKind::fermi, spec.beta, energies[(std::size_t)m], mu);
            CHECK(std::abs(res.mean_occupation[(std::size_t)m] - oracle) <
                  3.0 * res.stderr_occupation[(std::size_t)m]);
        }
    }
}

TEST_CASE("fitted chemical potential reproduces the target total") {
    std::vector<double> energies;
    for (int i = 0; i < 10; ++i) energies.push_back(0.5 * i);
    const ModeSpectrum spec(energies, 0.4);
    for (const StatKind kind : {StatKind::bose, StatKind::fermi}) {
        const double mu = fit_chemical_potential(kind, spec, 5.0);
        double total = 0.0;
        for (double e : energies) total += analytic_occupancy(kind, spec.beta, e, mu);
        CHECK(total == doctest::Approx(5.0).epsilon(1e-8));
        if (kind == StatKind::bose) CHECK(mu < energies.front());
    }
}
