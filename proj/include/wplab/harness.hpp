#pragma once

// Reproducible experiment runner. A scenario JSON names one experiment, its
// parameters and a master seed; `run` validates everything up front, executes
// the owning module, and writes plot-ready CSV/JSON plus a manifest into a
// fresh output directory. Identical scenario + seed gives byte-identical
// result files at any thread count.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wplab/detection.hpp"
#include "wplab/epr.hpp"
#include "wplab/evolution.hpp"
#include "wplab/io.hpp"
#include "wplab/rng.hpp"
#include "wplab/spin.hpp"
#include "wplab/statistics.hpp"
#include "wplab/version.hpp"
#include "wplab/wavepacket.hpp"

namespace wplab {

enum class Experiment { evolve, emulsion, stern_gerlach, epr_chsh, epr_sweep, statistics };

inline const char* experiment_name(Experiment e) {
    switch (e) {
    case Experiment::evolve: return "evolve";
    case Experiment::emulsion: return "emulsion";
    case Experiment::stern_gerlach: return "stern_gerlach";
    case Experiment::epr_chsh: return "epr_chsh";
    case Experiment::epr_sweep: return "epr_sweep";
    case Experiment::statistics: return "statistics";
    }
    return "?";
}

struct Scenario {
    Experiment experiment = Experiment::evolve;
    std::uint64_t master_seed = 0;
    std::string output_path; // empty: pick a fresh timestamped directory
    json parameters;
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    bool force = false;
    int threads = 1;
};

struct RunResult {
    std::filesystem::path output_dir;
    std::vector<std::string> result_files; // relative names, manifest excluded
    json summary;                          // convenience echo for callers
};

namespace cfg {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    raise(Errc::config_error, path + ": " + msg);
}

inline void check_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

// Unknown keys are errors: a typo must not silently fall back to a default.
inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed,
                       std::initializer_list<const char*> required) {
    check_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
    for (const char* k : required)
        if (!j.contains(k)) fail(path + "." + k, "missing required key");
}

inline double num_at(const json& j, const std::string& path, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

inline double num_or(const json& j, const std::string& path, const char* key, double dflt) {
    return j.contains(key) ? num_at(j, path, key) : dflt;
}

inline std::int64_t int_at(const json& j, const std::string& path, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

inline std::int64_t int_or(const json& j, const std::string& path, const char* key,
                           std::int64_t dflt) {
    return j.contains(key) ? int_at(j, path, key) : dflt;
}

inline std::string str_at(const json& j, const std::string& path, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> num_array_at(const json& j, const std::string& path,
                                        const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.empty()) fail(path + "." + key, "expected a nonempty array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

// Re-raise a domain error as a ConfigError carrying the field path.
template <typename Fn>
auto domain(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == Errc::config_error) throw;
        fail(path, e.what());
    }
}

inline Grid1D parse_grid(const json& j, const std::string& path) {
    check_keys(j, path, {"n_points", "spacing", "origin"}, {"n_points", "spacing"});
    const int n = static_cast<int>(int_at(j, path, "n_points"));
    const double dx = num_at(j, path, "spacing");
    return domain(path, [&] {
        if (j.contains("origin")) return Grid1D(n, dx, num_at(j, path, "origin"));
        return Grid1D::centered(n, dx);
    });
}

// Either a Gaussian built on the scenario grid or a state loaded from a
// wavepacket JSON file (which carries its own grid).
inline Wavepacket parse_packet(const json& params, const std::string& base) {
    const std::string path = base + ".packet";
    const json& j = params.at("packet");
    if (j.is_object() && j.contains("load")) {
        check_keys(j, path, {"load"}, {"load"});
        const std::string file = str_at(j, path, "load");
        return domain(path, [&] {
            const json state = json::parse(read_text_file(file), nullptr, false);
            require(!state.is_discarded(), Errc::invalid_argument,
                    file + " is not valid JSON");
            return wavepacket_from_json(state);
        });
    }
    check_keys(j, path, {"center", "momentum", "sigma", "mass", "species"},
               {"center", "sigma"});
    if (!params.contains("grid")) fail(base + ".grid", "missing required key");
    const Grid1D grid = parse_grid(params.at("grid"), base + ".grid");
    return domain(path, [&] {
        return make_gaussian(grid, num_at(j, path, "center"), num_or(j, path, "momentum", 0.0),
                             num_at(j, path, "sigma"), num_or(j, path, "mass", 1.0),
                             j.contains("species") ? str_at(j, path, "species") : "electron");
    });
}

inline Potential parse_potential(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "omega", "center", "height", "left", "right", "values"},
               {"kind"});
    const std::string kind = str_at(j, path, "kind");
    return domain(path, [&]() -> Potential {
        if (kind == "free") {
            check_keys(j, path, {"kind"}, {"kind"});
            return Potential::free_space();
        }
        if (kind == "harmonic") {
            check_keys(j, path, {"kind", "omega", "center"}, {"kind", "omega"});
            return Potential::harmonic(num_at(j, path, "omega"), num_or(j, path, "center", 0.0));
        }
        if (kind == "barrier") {
            check_keys(j, path, {"kind", "height", "left", "right"},
                       {"kind", "height", "left", "right"});
            return Potential::barrier(num_at(j, path, "height"), num_at(j, path, "left"),
                                      num_at(j, path, "right"));
        }
        if (kind == "tabulated") {
            check_keys(j, path, {"kind", "values"}, {"kind", "values"});
            return Potential::tabulated(num_array_at(j, path, "values"));
        }
        fail(path + ".kind", "must be free, harmonic, barrier or tabulated");
    });
}

inline double angle_deg_at(const json& j, const std::string& path, const char* key) {
    return deg_to_rad(num_at(j, path, key));
}

inline SpinDirection parse_spin(const json& j, const std::string& path) {
    check_keys(j, path, {"theta_deg", "phi_deg"}, {"theta_deg", "phi_deg"});
    return domain(path, [&] {
        return SpinDirection(angle_deg_at(j, path, "theta_deg"),
                             angle_deg_at(j, path, "phi_deg"));
    });
}

inline ApparatusAxis parse_axis(const json& j, const std::string& path) {
    check_keys(j, path, {"theta_deg", "phi_deg"}, {"theta_deg", "phi_deg"});
    return domain(path, [&] {
        return ApparatusAxis(angle_deg_at(j, path, "theta_deg"),
                             angle_deg_at(j, path, "phi_deg"));
    });
}

inline EprModel parse_model(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "p_split"}, {"kind"});
    const std::string kind = str_at(j, path, "kind");
    return domain(path, [&]() -> EprModel {
        if (kind == "P1") return EprModel::p1();
        if (kind == "P2") return EprModel::p2();
        if (kind == "mixture") {
            if (!j.contains("p_split")) fail(path + ".p_split", "missing required key");
            return EprModel::mixture(num_at(j, path, "p_split"));
        }
        fail(path + ".kind", "must be P1, P2 or mixture");
    });
}

} // namespace cfg

// ---------------------------------------------------------------------------
// typed per-experiment configurations

struct EvolveConfig {
    Wavepacket packet;
    Potential potential;
    EvolutionConfig evolution;
};

struct EmulsionConfig {
    Wavepacket prototype;
    std::optional<Potential> pre_potential;
    std::optional<EvolutionConfig> pre_evolution;
    MediumConfig medium;
    std::int64_t n_particles;
};

struct SternGerlachConfig {
    SpinDirection spin;
    std::vector<ApparatusAxis> axes;
    std::int64_t n_per_axis;
};

struct EprChshConfig {
    EprModel model;
    ChshSettings settings;
    std::int64_t n_per_setting;
    std::string model_source; // "explicit" or "dissimilar_species"
    std::vector<std::string> pair_species;
};

struct EprSweepConfig {
    double mu;
    std::vector<double> distances;
    double zeta;
    std::int64_t n_per_distance;
};

struct StatisticsConfig {
    ModeSpectrum spectrum;
    StatKind kind;
    int total_quanta;
    long n_steps;
    long burn_in;
};

namespace cfg {

inline EvolveConfig parse_evolve(const json& p) {
    const std::string base = "parameters";
    check_keys(p, base, {"grid", "packet", "potential", "dt", "n_steps", "trace_stride"},
               {"packet", "dt", "n_steps"});
    EvolveConfig c{
        parse_packet(p, base),
        p.contains("potential") ? parse_potential(p.at("potential"), base + ".potential")
                                : Potential::free_space(),
        domain(base, [&] {
            return EvolutionConfig(num_at(p, base, "dt"), int_at(p, base, "n_steps"),
                                   int_or(p, base, "trace_stride", 0));
        })};
    domain(base + ".potential",
           [&] { return c.potential.evaluate(c.packet.grid, c.packet.mass); });
    return c;
}

inline EmulsionConfig parse_emulsion(const json& p) {
    const std::string base = "parameters";
    check_keys(p, base, {"grid", "packet", "evolve", "medium", "n_particles"},
               {"packet", "medium", "n_particles"});
    Wavepacket proto = parse_packet(p, base);

    std::optional<Potential> pot;
    std::optional<EvolutionConfig> evo;
    if (p.contains("evolve")) {
        const json& je = p.at("evolve");
        check_keys(je, base + ".evolve", {"potential", "dt", "n_steps"}, {"dt", "n_steps"});
        pot = je.contains("potential")
                  ? parse_potential(je.at("potential"), base + ".evolve.potential")
                  : Potential::free_space();
        evo = domain(base + ".evolve", [&] {
            return EvolutionConfig(num_at(je, base + ".evolve", "dt"),
                                   int_at(je, base + ".evolve", "n_steps"));
        });
        domain(base + ".evolve.potential", [&] { return pot->evaluate(proto.grid, proto.mass); });
    }

    const json& jm = p.at("medium");
    check_keys(jm, base + ".medium", {"delta_t", "reduction_width"},
               {"delta_t", "reduction_width"});
    MediumConfig medium = domain(base + ".medium", [&] {
        return MediumConfig(num_at(jm, base + ".medium", "delta_t"),
                            num_at(jm, base + ".medium", "reduction_width"));
    });
    if (medium.reduction_width < 2.0 * proto.grid.spacing)
        fail(base + ".medium.reduction_width", "must be >= 2 * grid spacing");

    const std::int64_t n = int_at(p, base, "n_particles");
    if (n < 100) fail(base + ".n_particles", "ensemble too small, need >= 100");
    return EmulsionConfig{std::move(proto), std::move(pot), evo, medium, n};
}

inline SternGerlachConfig parse_stern_gerlach(const json& p) {
    const std::string base = "parameters";
    check_keys(p, base, {"spin", "axes", "n_per_axis"}, {"spin", "axes", "n_per_axis"});
    SternGerlachConfig c{parse_spin(p.at("spin"), base + ".spin"), {}, 0};
    if (!p.at("axes").is_array() || p.at("axes").empty())
        fail(base + ".axes", "expected a nonempty array");
    int idx = 0;
    for (const auto& ja : p.at("axes"))
        c.axes.push_back(parse_axis(ja, base + ".axes[" + std::to_string(idx++) + "]"));
    c.n_per_axis = int_at(p, base, "n_per_axis");
    if (c.n_per_axis < 1) fail(base + ".n_per_axis", "must be >= 1");

    // direction must be identifiable before any sampling starts
    std::vector<SgCounts> probe;
    for (const auto& a : c.axes) probe.push_back(SgCounts{a, 1, 1});
    if (!detail::axes_span_3space(probe))
        fail(base + ".axes", "axes do not span 3-space; spin direction not identifiable");
    return c;
}

inline EprChshConfig parse_epr_chsh(const json& p) {
    const std::string base = "parameters";
    check_keys(p, base, {"model", "settings_deg", "n_per_setting", "pair_species"},
               {"n_per_setting"});
    EprChshConfig c{EprModel::p1(),
                    {deg_to_rad(0), deg_to_rad(90), deg_to_rad(45), deg_to_rad(135)},
                    0,
                    "default",
                    {}};
    if (p.contains("model")) {
        c.model = parse_model(p.at("model"), base + ".model");
        c.model_source = "explicit";
    }
    if (p.contains("pair_species")) {
        const auto& js = p.at("pair_species");
        if (!js.is_array() || js.size() != 2 || !js[0].is_string() || !js[1].is_string())
            fail(base + ".pair_species", "expected an array of two species labels");
        c.pair_species = {js[0].get<std::string>(), js[1].get<std::string>()};
        if (c.pair_species[0] != c.pair_species[1]) {
            // dissimilar packets never coalesce, so the pair follows P2
            c.model = EprModel::p2();
            c.model_source = "dissimilar_species";
        }
    }
    if (p.contains("settings_deg")) {
        const json& js = p.at("settings_deg");
        check_keys(js, base + ".settings_deg", {"a", "a_prime", "b", "b_prime"},
                   {"a", "a_prime", "b", "b_prime"});
        c.settings = {angle_deg_at(js, base + ".settings_deg", "a"),
                      angle_deg_at(js, base + ".settings_deg", "a_prime"),
                      angle_deg_at(js, base + ".settings_deg", "b"),
                      angle_deg_at(js, base + ".settings_deg", "b_prime")};
    }
    c.n_per_setting = int_at(p, base, "n_per_setting");
    if (c.n_per_setting < 100) fail(base + ".n_per_setting", "must be >= 100");
    return c;
}

inline EprSweepConfig parse_epr_sweep(const json& p) {
    const std::string base = "parameters";
    check_keys(p, base, {"mu", "distances", "zeta_deg", "n_per_distance"},
               {"mu", "distances", "n_per_distance"});
    EprSweepConfig c{0, {}, 0, 0};
    c.mu = num_at(p, base, "mu");
    if (c.mu < 0) fail(base + ".mu", "must be >= 0");
    c.distances = num_array_at(p, base, "distances");
    for (std::size_t i = 0; i + 1 < c.distances.size(); ++i)
        if (c.distances[i] > c.distances[i + 1])
            fail(base + ".distances", "must be sorted ascending");
    if (c.distances.front() < 0) fail(base + ".distances", "must be >= 0");
    c.zeta = deg_to_rad(num_or(p, base, "zeta_deg", 0.0));
    c.n_per_distance = int_at(p, base, "n_per_distance");
    if (c.n_per_distance < 100) fail(base + ".n_per_distance", "must be >= 100");
    return c;
}

inline StatisticsConfig parse_statistics(const json& p) {
    const std::string base = "parameters";
    check_keys(p, base,
               {"kind", "energies", "mode_count", "mode_spacing", "mode_base", "beta",
                "total_quanta", "n_steps", "burn_in"},
               {"kind", "beta", "total_quanta", "n_steps", "burn_in"});
    const std::string kind_s = str_at(p, base, "kind");
    if (kind_s != "bose" && kind_s != "fermi") fail(base + ".kind", "must be bose or fermi");
    const StatKind kind = (kind_s == "bose") ? StatKind::bose : StatKind::fermi;

    std::vector<double> energies;
    if (p.contains("energies")) {
        energies = num_array_at(p, base, "energies");
    } else {
        if (!p.contains("mode_count")) fail(base + ".mode_count", "missing required key");
        if (!p.contains("mode_spacing")) fail(base + ".mode_spacing", "missing required key");
        const std::int64_t count = int_at(p, base, "mode_count");
        if (count < 1) fail(base + ".mode_count", "must be >= 1");
        const double spacing = num_at(p, base, "mode_spacing");
        const double e0 = num_or(p, base, "mode_base", 0.0);
        for (std::int64_t i = 0; i < count; ++i)
            energies.push_back(e0 + spacing * static_cast<double>(i));
    }

    ModeSpectrum spectrum =
        domain(base, [&] { return ModeSpectrum(energies, num_at(p, base, "beta")); });

    const std::int64_t total = int_at(p, base, "total_quanta");
    if (total < 1) fail(base + ".total_quanta", "must be >= 1");
    if (kind == StatKind::fermi && total > spectrum.n_modes())
        fail(base + ".total_quanta",
             "fermi total_quanta exceeds the number of modes (" +
                 std::to_string(spectrum.n_modes()) + ")");
    const std::int64_t n_steps = int_at(p, base, "n_steps");
    const std::int64_t burn_in = int_at(p, base, "burn_in");
    if (!(n_steps > burn_in && burn_in >= 0))
        fail(base + ".n_steps", "need n_steps > burn_in >= 0");
    return StatisticsConfig{std::move(spectrum), kind, static_cast<int>(total),
                            static_cast<long>(n_steps), static_cast<long>(burn_in)};
}

} // namespace cfg

// Parse + full validation of a scenario document. Every module precondition
// that can be checked from the file is checked here, before any output
// exists.
inline Scenario load_scenario(const json& doc) {
    cfg::check_keys(doc, "scenario", {"experiment", "master_seed", "output_path", "parameters"},
                    {"experiment", "master_seed", "parameters"});
    Scenario sc;
    const std::string name = cfg::str_at(doc, "scenario", "experiment");
    if (name == "evolve") sc.experiment = Experiment::evolve;
    else if (name == "emulsion") sc.experiment = Experiment::emulsion;
    else if (name == "stern_gerlach") sc.experiment = Experiment::stern_gerlach;
    else if (name == "epr_chsh") sc.experiment = Experiment::epr_chsh;
    else if (name == "epr_sweep") sc.experiment = Experiment::epr_sweep;
    else if (name == "statistics") sc.experiment = Experiment::statistics;
    else cfg::fail("scenario.experiment", "unknown experiment '" + name + "'");

    const auto& seed = doc.at("master_seed");
    if (!seed.is_number_integer())
        cfg::fail("scenario.master_seed", "expected a non-negative integer");
    if (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)
        cfg::fail("scenario.master_seed", "expected a non-negative integer");
    sc.master_seed = seed.get<std::uint64_t>();
    if (doc.contains("output_path")) sc.output_path = cfg::str_at(doc, "scenario", "output_path");
    sc.parameters = doc.at("parameters");
    cfg::check_object(sc.parameters, "parameters");

    switch (sc.experiment) {
    case Experiment::evolve: cfg::parse_evolve(sc.parameters); break;
    case Experiment::emulsion: cfg::parse_emulsion(sc.parameters); break;
    case Experiment::stern_gerlach: cfg::parse_stern_gerlach(sc.parameters); break;
    case Experiment::epr_chsh: cfg::parse_epr_chsh(sc.parameters); break;
    case Experiment::epr_sweep: cfg::parse_epr_sweep(sc.parameters); break;
    case Experiment::statistics: cfg::parse_statistics(sc.parameters); break;
    }
    return sc;
}

inline Scenario load_scenario_file(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        raise(Errc::config_error, e.what());
    }
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded())
        raise(Errc::config_error, "scenario file " + path.string() + " is not valid JSON");
    return load_scenario(doc);
}

namespace detail {

inline std::string utc_timestamp(const char* fmt) {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::strftime(buf, sizeof(buf), fmt, &tm);
    return buf;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

// Content digest of (experiment, effective seed, parameters); the output
// path does not affect the numbers and stays out of the digest.
inline std::string scenario_digest(const Scenario& sc, std::uint64_t effective_seed) {
    json canon;
    canon["experiment"] = experiment_name(sc.experiment);
    canon["master_seed"] = effective_seed;
    canon["parameters"] = sc.parameters;
    return detail::hex64(fnv1a64(canon.dump()));
}

using FileSet = std::vector<std::pair<std::string, std::string>>; // name -> bytes

namespace runner {

inline json library_conventions() {
    return json{{"rng", "philox4x32-10"},
                {"seed_derivation",
                 "mix64(mix64(master xor fnv1a64(label)) + (index+1)*0x9E3779B97F4A7C15)"},
                {"overlap_threshold_default", kDefaultOverlapThreshold},
                {"coalesce_profile", "normalized-sum"}};
}

// Every decision knob that can move a number in the outputs shows up here.
inline void add_conventions(Experiment exp, const json& params, json& conv) {
    switch (exp) {
    case Experiment::evolve:
        cfg::parse_evolve(params);
        conv["splitting"] = "strang-symmetric";
        conv["boundary"] = "periodic";
        conv["boundary_leak_threshold"] = 1e-8;
        break;
    case Experiment::emulsion: {
        const EmulsionConfig c = cfg::parse_emulsion(params);
        conv["reduction_profile"] = "gaussian";
        conv["reduction_width"] = c.medium.reduction_width;
        conv["effects_per_traversal"] = "one per quantum";
        break;
    }
    case Experiment::stern_gerlach:
        cfg::parse_stern_gerlach(params);
        conv["up_probability"] = "cos^2(alpha/2)";
        conv["estimator"] = "mle: 5deg grid + shrinking pattern search";
        break;
    case Experiment::epr_chsh: {
        const EprChshConfig c = cfg::parse_epr_chsh(params);
        conv["model"] = c.model.name();
        conv["model_source"] = c.model_source;
        conv["p2_after_split"] = true;
        if (!c.pair_species.empty()) conv["pair_species"] = c.pair_species;
        break;
    }
    case Experiment::epr_sweep: {
        const EprSweepConfig c = cfg::parse_epr_sweep(params);
        conv["p_split_model"] = "1-exp(-mu*L)";
        conv["mu"] = c.mu;
        conv["post_split_law"] = "P2";
        break;
    }
    case Experiment::statistics:
        cfg::parse_statistics(params);
        conv["rate_form"] =
            "n_from*(1+n_to) bose / n_from*(1-n_to) fermi, * exp(-beta*max(0,dE))";
        conv["proposal"] = "uniform ordered mode pair, single-quantum transfer";
        conv["mu_fit"] = "grand-canonical total matched by bisection to 1e-10";
        break;
    }
}

inline FileSet run_evolve(const EvolveConfig& c, std::uint64_t, int, json& summary) {
    const EvolveResult res = evolve(c.packet, c.potential, c.evolution);

    CsvWriter csv({"time", "mean_x", "delta_x", "delta_p", "norm"});
    for (const auto& t : res.trace)
        csv.row({format_double(t.time), format_double(t.mean_x), format_double(t.delta_x),
                 format_double(t.delta_p), format_double(t.norm)});

    const TracePoint& last = res.trace.back();
    summary = {{"final_time", last.time},
               {"mean_x", last.mean_x},
               {"delta_x", last.delta_x},
               {"delta_p", last.delta_p},
               {"norm", last.norm},
               {"boundary_leak", res.boundary_leak},
               {"boundary_leak_step", res.boundary_leak_step}};

    FileSet files;
    files.emplace_back("trace.csv", csv.text());
    files.emplace_back("final_state.json", wavepacket_to_json(res.state).dump(2) + "\n");
    files.emplace_back("summary.json", summary.dump(2) + "\n");
    return files;
}

inline FileSet run_emulsion(const EmulsionConfig& c, std::uint64_t seed, int threads,
                            json& summary) {
    Wavepacket proto = c.prototype;
    if (c.pre_evolution)
        proto = evolve(proto, *c.pre_potential, *c.pre_evolution).state;
    const double true_width = moments(proto).delta_x;

    const EmulsionResult res =
        run_emulsion_experiment(proto, c.n_particles, c.medium, seed, threads);

    CsvWriter csv({"packet_id", "position", "time"});
    for (const auto& e : res.events)
        csv.row({std::to_string(e.packet_id), format_double(e.position),
                 format_double(e.time)});

    const double z = (res.width_estimate - true_width) / res.stderr_width;
    summary = {{"n", c.n_particles},
               {"width_estimate", res.width_estimate},
               {"stderr", res.stderr_width},
               {"true_width", true_width},
               {"z_score", z}};

    FileSet files;
    files.emplace_back("events.csv", csv.text());
    files.emplace_back("summary.json", summary.dump(2) + "\n");
    return files;
}

inline FileSet run_stern_gerlach(const SternGerlachConfig& c, std::uint64_t seed, int threads,
                                 json& summary) {
    std::vector<SgCounts> counts;
    for (std::size_t i = 0; i < c.axes.size(); ++i)
        counts.push_back(sg_counts_parallel(c.spin, c.axes[i], c.n_per_axis, seed,
                                            "sg." + std::to_string(i), threads));

    const DirectionEstimate est = estimate_direction(counts);

    CsvWriter csv({"axis_theta", "axis_phi", "n_up", "n_down"});
    for (const auto& k : counts)
        csv.row({format_double(k.axis.theta), format_double(k.axis.phi),
                 std::to_string(k.n_up), std::to_string(k.n_down)});

    summary = {{"theta", est.estimate.theta},
               {"phi", est.estimate.phi},
               {"cone_halfangle_95", est.cone_halfangle_95},
               {"log_likelihood", est.log_likelihood}};

    FileSet files;
    files.emplace_back("counts.csv", csv.text());
    files.emplace_back("estimate.json", summary.dump(2) + "\n");
    return files;
}

inline json record_to_json(const CorrelationRecord& r) {
    return json{{"zeta", r.zeta},         {"n", r.n},
                {"counts_pp", r.counts_pp}, {"counts_pm", r.counts_pm},
                {"counts_mp", r.counts_mp}, {"counts_mm", r.counts_mm},
                {"e_hat", r.e_hat},         {"stderr", r.stderr_e}};
}

inline FileSet run_epr_chsh(const EprChshConfig& c, std::uint64_t seed, int threads,
                            json& summary) {
    const ChshResult res = chsh(c.model, c.settings, c.n_per_setting, seed, threads);

    summary = {{"settings",
                {{"a", res.settings.a},
                 {"a_prime", res.settings.a_prime},
                 {"b", res.settings.b},
                 {"b_prime", res.settings.b_prime}}},
               {"n_per_setting", c.n_per_setting},
               {"records",
                {record_to_json(res.records[0]), record_to_json(res.records[1]),
                 record_to_json(res.records[2]), record_to_json(res.records[3])}},
               {"s_hat", res.s_hat},
               {"stderr", res.stderr_s},
               {"verdict", res.violates_bell() ? "violates_bell" : "consistent_with_local"}};

    FileSet files;
    files.emplace_back("chsh.json", summary.dump(2) + "\n");
    return files;
}

inline FileSet run_epr_sweep(const EprSweepConfig& c, std::uint64_t seed, int threads,
                             json& summary) {
    const std::vector<SweepRow> rows =
        correlation_sweep(c.mu, c.distances, c.zeta, c.n_per_distance, seed, threads);

    CsvWriter csv({"distance", "p_split", "e_hat", "stderr", "e_copenhagen"});
    for (const auto& r : rows)
        csv.row({format_double(r.distance), format_double(r.p_split), format_double(r.e_hat),
                 format_double(r.stderr_e), format_double(r.e_copenhagen)});

    summary = {{"zeta", c.zeta},
               {"mu", c.mu},
               {"n_per_distance", c.n_per_distance},
               {"rows", rows.size()}};

    FileSet files;
    files.emplace_back("sweep.csv", csv.text());
    files.emplace_back("summary.json", summary.dump(2) + "\n");
    return files;
}

inline FileSet run_statistics(const StatisticsConfig& c, std::uint64_t seed, int,
                              json& summary) {
    const BalanceResult res =
        simulate_balance(c.spectrum, c.kind, c.total_quanta, c.n_steps, c.burn_in,
                         derive_seed(seed, "balance", 0));
    const double mu = fit_chemical_potential(c.kind, c.spectrum,
                                             static_cast<double>(c.total_quanta));

    CsvWriter csv({"mode_index", "energy", "mean_occupation", "stderr", "analytic_value"});
    for (int m = 0; m < c.spectrum.n_modes(); ++m) {
        const double e = c.spectrum.energies[static_cast<std::size_t>(m)];
        csv.row({std::to_string(m), format_double(e),
                 format_double(res.mean_occupation[static_cast<std::size_t>(m)]),
                 format_double(res.stderr_occupation[static_cast<std::size_t>(m)]),
                 format_double(analytic_occupancy(c.kind, c.spectrum.beta, e, mu))});
    }

    summary = {{"kind", stat_kind_name(c.kind)},
               {"beta", c.spectrum.beta},
               {"total_quanta", c.total_quanta},
               {"fitted_mu", mu},
               {"acceptance_rate", res.acceptance_rate},
               {"n_steps", res.n_steps},
               {"burn_in", res.burn_in}};

    FileSet files;
    files.emplace_back("occupations.csv", csv.text());
    files.emplace_back("summary.json", summary.dump(2) + "\n");
    return files;
}

} // namespace runner

// Execute a validated scenario. Results are computed fully in memory before
// anything is written, so a failing run leaves no partial files.
inline RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {}) {
    require(opts.threads >= 1 && opts.threads <= 256, Errc::config_error,
            "threads must lie in [1, 256]");
    const std::uint64_t seed = opts.seed_override.value_or(sc.master_seed);
    const std::string digest = scenario_digest(sc, seed);
    const std::string started = detail::utc_timestamp("%Y-%m-%dT%H:%M:%SZ");

    json conventions = runner::library_conventions();
    runner::add_conventions(sc.experiment, sc.parameters, conventions);
    json summary;
    FileSet files;
    try {
        switch (sc.experiment) {
        case Experiment::evolve:
            files = runner::run_evolve(cfg::parse_evolve(sc.parameters), seed, opts.threads,
                                       summary);
            break;
        case Experiment::emulsion:
            files = runner::run_emulsion(cfg::parse_emulsion(sc.parameters), seed, opts.threads,
                                         summary);
            break;
        case Experiment::stern_gerlach:
            files = runner::run_stern_gerlach(cfg::parse_stern_gerlach(sc.parameters), seed,
                                              opts.threads, summary);
            break;
        case Experiment::epr_chsh:
            files = runner::run_epr_chsh(cfg::parse_epr_chsh(sc.parameters), seed, opts.threads,
                                         summary);
            break;
        case Experiment::epr_sweep:
            files = runner::run_epr_sweep(cfg::parse_epr_sweep(sc.parameters), seed, opts.threads,
                                          summary);
            break;
        case Experiment::statistics:
            files = runner::run_statistics(cfg::parse_statistics(sc.parameters), seed,
                                           opts.threads, summary);
            break;
        }
    } catch (const Error& e) {
        if (e.code() == Errc::config_error || e.code() == Errc::io_error) throw;
        raise(Errc::module_error,
              std::string("while running ") + experiment_name(sc.experiment) + ": " + e.what());
    }

    namespace fs = std::filesystem;
    fs::path out_dir;
    if (opts.out_override) out_dir = *opts.out_override;
    else if (!sc.output_path.empty()) out_dir = sc.output_path;
    if (!out_dir.empty()) {
        if (fs::exists(out_dir)) {
            require(opts.force, Errc::io_error,
                    "output directory " + out_dir.string() +
                        " exists; pass --force to overwrite");
            fs::remove_all(out_dir);
        }
    } else {
        const std::string stamp = detail::utc_timestamp("%Y%m%d-%H%M%S");
        fs::path candidate =
            fs::path("runs") / (std::string(experiment_name(sc.experiment)) + "-" + stamp + "-" +
                                digest.substr(0, 8));
        int k = 1;
        out_dir = candidate;
        while (fs::exists(out_dir)) out_dir = candidate.string() + "-" + std::to_string(k++);
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec && fs::is_directory(out_dir), Errc::io_error,
            "cannot create output directory " + out_dir.string());

    for (const auto& [name, content] : files) write_text_file(out_dir / name, content);

    json manifest = {{"tool", "wplab"},
                     {"version", WPLAB_VERSION},
                     {"experiment", experiment_name(sc.experiment)},
                     {"scenario_digest", digest},
                     {"master_seed", seed},
                     {"threads", opts.threads},
                     {"started_utc", started},
                     {"finished_utc", detail::utc_timestamp("%Y-%m-%dT%H:%M:%SZ")},
                     {"conventions", conventions},
                     {"parameters", sc.parameters},
                     {"result_files", json::array()}};
    for (const auto& [name, content] : files) {
        (void)content;
        manifest["result_files"].push_back(name);
    }
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    RunResult rr;
    rr.output_dir = out_dir;
    for (const auto& [name, content] : files) {
        (void)content;
        rr.result_files.push_back(name);
    }
    rr.summary = std::move(summary);
    return rr;
}

// Manifest skeleton for a scenario without running it or touching the
// filesystem (used to audit that every decision knob shows up).
inline json manifest_preview(const Scenario& sc, const RunOptions& opts = {}) {
    const std::uint64_t seed = opts.seed_override.value_or(sc.master_seed);
    json conventions = runner::library_conventions();
    runner::add_conventions(sc.experiment, sc.parameters, conventions);
    return json{{"tool", "wplab"},
                {"version", WPLAB_VERSION},
                {"experiment", experiment_name(sc.experiment)},
                {"scenario_digest", scenario_digest(sc, seed)},
                {"master_seed", seed},
                {"conventions", conventions},
                {"parameters", sc.parameters}};
}

} // namespace wplab
