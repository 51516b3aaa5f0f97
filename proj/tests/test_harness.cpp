#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wplab/cli.hpp"
#include "wplab/harness.hpp"

using namespace wplab;
namespace fs = std::filesystem;

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

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("wplab_test_" + name);
    fs::remove_all(p);
    return p;
}

json chsh_doc(long n = 100000) {
    return json{{"experiment", "epr_chsh"},
                {"master_seed", 42},
                {"parameters", {{"n_per_setting", n}}}};
}

json emulsion_doc(double reduction_width = 0.2) {
    return json{{"experiment", "emulsion"},
                {"master_seed", 42},
                {"parameters",
                 {{"grid", {{"n_points", 512}, {"spacing", 0.05}}},
                  {"packet", {{"center", 0.0}, {"sigma", 1.0}}},
                  {"medium", {{"delta_t", 0.01}, {"reduction_width", reduction_width}}},
                  {"n_particles", 500}}}};
}

json evolve_doc() {
    return json{{"experiment", "evolve"},
                {"master_seed", 1},
                {"parameters",
                 {{"grid", {{"n_points", 256}, {"spacing", 0.1}}},
                  {"packet", {{"center", 0.0}, {"sigma", 1.0}, {"momentum", 0.5}}},
                  {"potential", {{"kind", "free"}}},
                  {"dt", 0.01},
                  {"n_steps", 100},
                  {"trace_stride", 10}}}};
}

json sweep_doc() {
    return json{{"experiment", "epr_sweep"},
                {"master_seed", 3},
                {"parameters",
                 {{"mu", 0.5},
                  {"distances", {0.0, 1.0, 2.0}},
                  {"zeta_deg", 0.0},
                  {"n_per_distance", 20000}}}};
}

json sg_doc() {
    return json{{"experiment", "stern_gerlach"},
                {"master_seed", 4},
                {"parameters",
                 {{"spin", {{"theta_deg", 63.0}, {"phi_deg", 117.0}}},
                  {"axes",
                   {{{"theta_deg", 90.0}, {"phi_deg", 0.0}},
                    {{"theta_deg", 90.0}, {"phi_deg", 90.0}},
                    {{"theta_deg", 0.0}, {"phi_deg", 0.0}}}},
                  {"n_per_axis", 20000}}}};
}

json stats_doc() {
    return json{{"experiment", "statistics"},
                {"master_seed", 5},
                {"parameters",
                 {{"kind", "bose"},
                  {"mode_count", 5},
                  {"mode_spacing", 0.5},
                  {"beta", 0.5},
                  {"total_quanta", 3},
                  {"n_steps", 20000},
                  {"burn_in", 1000}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void check_identical_results(const RunResult& a, const RunResult& b) {
    REQUIRE(a.result_files == b.result_files);
    for (const auto& name : a.result_files)
        CHECK(slurp(a.output_dir / name) == slurp(b.output_dir / name));
}

} // namespace

TEST_CASE("scenario validation catches unknown keys with a field path") {
    json doc = chsh_doc();
    doc["parameters"]["n_per_settig"] = 5; // typo
    try {
        load_scenario(doc);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_error);
        CHECK(std::string(e.what()).find("parameters.n_per_settig") != std::string::npos);
    }
}

TEST_CASE("scenario validation catches missing and ill-typed fields") {
    json doc = chsh_doc();
    doc["parameters"].erase("n_per_setting");
    CHECK_ERRC(load_scenario(doc), Errc::config_error);

    doc = chsh_doc();
    doc["parameters"]["n_per_setting"] = "many";
    CHECK_ERRC(load_scenario(doc), Errc::config_error);

    doc = chsh_doc();
    doc["experiment"] = "teleportation";
    CHECK_ERRC(load_scenario(doc), Errc::config_error);

    doc = chsh_doc();
    doc["master_seed"] = -5;
    CHECK_ERRC(load_scenario(doc), Errc::config_error);
}

TEST_CASE("non-numeric array elements fail with an indexed path") {
    json doc = sweep_doc();
    doc["parameters"]["distances"] = {0.0, "far", 2.0};
    try {
        load_scenario(doc);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_error);
        CHECK(std::string(e.what()).find("parameters.distances[1]") != std::string::npos);
    }
}

TEST_CASE("loading a packet from a broken file is a config error") {
    const fs::path dir = fresh_dir("badload");
    fs::create_directories(dir);
    write_text_file(dir / "state.json", "{ not json");
    json doc = evolve_doc();
    doc["parameters"].erase("grid");
    doc["parameters"]["packet"] = {{"load", (dir / "state.json").string()}};
    CHECK_ERRC(load_scenario(doc), Errc::config_error);
}

TEST_CASE("fermi overfill is a config error naming the field") {
    json doc = stats_doc();
    doc["parameters"]["kind"] = "fermi";
    doc["parameters"]["total_quanta"] = 9; // > 5 modes
    try {
        load_scenario(doc);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_error);
        CHECK(std::string(e.what()).find("parameters.total_quanta") != std::string::npos);
    }
}

TEST_CASE("module preconditions are checked before any output exists") {
    json doc = emulsion_doc();
    doc["parameters"]["n_particles"] = 10; // below the ensemble minimum
    const fs::path out = fresh_dir("nowork");
    CHECK_ERRC(load_scenario(doc), Errc::config_error);
    CHECK_FALSE(fs::exists(out));

    // a packet too wide for its box is caught at parse time too
    json leak = emulsion_doc();
    leak["parameters"]["grid"]["n_points"] = 128;
    leak["parameters"]["grid"]["spacing"] = 0.02;
    CHECK_ERRC(load_scenario(leak), Errc::config_error);
}

TEST_CASE("chsh with P1 defaults violates bell") {
    const Scenario sc = load_scenario(chsh_doc());
    RunOptions opts;
    opts.out_override = fresh_dir("chsh.p1").string();
    const RunResult rr = run_scenario(sc, opts);
    CHECK(rr.summary["verdict"] == "violates_bell");
    CHECK(rr.summary["s_hat"].get<double>() > 2.0);

    const json report = json::parse(slurp(rr.output_dir / "chsh.json"));
    CHECK(report["records"].size() == 4);
    CHECK(report["verdict"] == "violates_bell");
    CHECK(fs::exists(rr.output_dir / "manifest.json"));
}

TEST_CASE("rerunning a scenario reproduces the result files byte for byte") {
    const Scenario sc = load_scenario(sweep_doc());
    RunOptions a, b;
    a.out_override = fresh_dir("det.a").string();
    b.out_override = fresh_dir("det.b").string();
    check_identical_results(run_scenario(sc, a), run_scenario(sc, b));
}

TEST_CASE("thread count never changes the results") {
    for (const json& doc : {chsh_doc(20000), sweep_doc(), emulsion_doc(), sg_doc()}) {
        const Scenario sc = load_scenario(doc);
        RunOptions one, four;
        one.threads = 1;
        one.out_override = fresh_dir("thr.1").string();
        four.threads = 4;
        four.out_override = fresh_dir("thr.4").string();
        check_identical_results(run_scenario(sc, one), run_scenario(sc, four));
    }
}

TEST_CASE("seed override changes the sampled results") {
    const Scenario sc = load_scenario(chsh_doc(20000));
    RunOptions a, b;
    a.out_override = fresh_dir("seed.a").string();
    b.out_override = fresh_dir("seed.b").string();
    b.seed_override = 777;
    const RunResult ra = run_scenario(sc, a);
    const RunResult rb = run_scenario(sc, b);
    CHECK(slurp(ra.output_dir / "chsh.json") != slurp(rb.output_dir / "chsh.json"));
}

TEST_CASE("an existing output directory is not overwritten without force") {
    const Scenario sc = load_scenario(stats_doc());
    RunOptions opts;
    opts.out_override = fresh_dir("overwrite").string();
    run_scenario(sc, opts);
    CHECK_ERRC(run_scenario(sc, opts), Errc::io_error);
    opts.force = true;
    run_scenario(sc, opts); // succeeds
}

TEST_CASE("evolve scenario writes a trace and a loadable final state") {
    const Scenario sc = load_scenario(evolve_doc());
    RunOptions opts;
    opts.out_override = fresh_dir("evolve").string();
    const RunResult rr = run_scenario(sc, opts);

    const std::string trace = slurp(rr.output_dir / "trace.csv");
    CHECK(trace.rfind("time,mean_x,delta_x,delta_p,norm\n", 0) == 0);
    long rows = -1; // header
    for (char c : trace) rows += (c == '\n');
    CHECK(rows == 11); // initial + 10 strides (final step coincides)

    const Wavepacket final_state =
        wavepacket_from_json(json::parse(slurp(rr.output_dir / "final_state.json")));
    CHECK(final_state.time == doctest::Approx(1.0));

    // a saved state can seed another run
    json doc2 = evolve_doc();
    doc2["parameters"].erase("grid");
    doc2["parameters"]["packet"] = {{"load", (rr.output_dir / "final_state.json").string()}};
    const Scenario sc2 = load_scenario(doc2);
    RunOptions opts2;
    opts2.out_override = fresh_dir("evolve2").string();
    const RunResult rr2 = run_scenario(sc2, opts2);
    CHECK(rr2.summary["final_time"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("statistics scenario writes one row per mode") {
    const Scenario sc = load_scenario(stats_doc());
    RunOptions opts;
    opts.out_override = fresh_dir("stats").string();
    const RunResult rr = run_scenario(sc, opts);
    const std::string csv = slurp(rr.output_dir / "occupations.csv");
    long rows = -1;
    for (char c : csv) rows += (c == '\n');
    CHECK(rows == 5);
    CHECK(csv.rfind("mode_index,energy,mean_occupation,stderr,analytic_value\n", 0) == 0);
}

TEST_CASE("stern-gerlach scenario recovers the configured spin") {
    const Scenario sc = load_scenario(sg_doc());
    RunOptions opts;
    opts.out_override = fresh_dir("sg").string();
    const RunResult rr = run_scenario(sc, opts);
    CHECK(rad_to_deg(rr.summary["theta"].get<double>()) == doctest::Approx(63.0).epsilon(0.05));
    CHECK(rad_to_deg(rr.summary["phi"].get<double>()) == doctest::Approx(117.0).epsilon(0.05));
}

TEST_CASE("every decision knob shows up in the manifest") {
    // reduction width
    const json m1 = manifest_preview(load_scenario(emulsion_doc(0.2)));
    const json m2 = manifest_preview(load_scenario(emulsion_doc(0.3)));
    CHECK(m1["conventions"]["reduction_width"] == 0.2);
    CHECK(m1 != m2);
    CHECK(m1["conventions"].contains("overlap_threshold_default"));
    CHECK(m1["conventions"]["rng"] == "philox4x32-10");

    // splitting-law knobs
    json s1 = sweep_doc(), s2 = sweep_doc();
    s2["parameters"]["mu"] = 0.9;
    const json ms1 = manifest_preview(load_scenario(s1));
    const json ms2 = manifest_preview(load_scenario(s2));
    CHECK(ms1["conventions"]["p_split_model"] == "1-exp(-mu*L)");
    CHECK(ms1 != ms2);

    // model selection
    json c1 = chsh_doc(), c2 = chsh_doc();
    c2["parameters"]["model"] = {{"kind", "P2"}};
    CHECK(manifest_preview(load_scenario(c1))["conventions"]["model"] == "P1");
    CHECK(manifest_preview(load_scenario(c2))["conventions"]["model"] == "P2");

    // rate forms
    const json mst = manifest_preview(load_scenario(stats_doc()));
    CHECK(mst["conventions"].contains("rate_form"));

    // identical scenario + seed => identical digest
    CHECK(manifest_preview(load_scenario(chsh_doc()))["scenario_digest"] ==
          manifest_preview(load_scenario(chsh_doc()))["scenario_digest"]);
}

TEST_CASE("dissimilar pair species force the separated-pair law") {
    json doc = chsh_doc(20000);
    doc["parameters"]["pair_species"] = {"neutron", "proton"};
    const Scenario sc = load_scenario(doc);
    const json mp = manifest_preview(sc);
    CHECK(mp["conventions"]["model"] == "P2");
    CHECK(mp["conventions"]["model_source"] == "dissimilar_species");

    json p2doc = chsh_doc(20000);
    p2doc["parameters"]["model"] = {{"kind", "P2"}};
    RunOptions a, b;
    a.out_override = fresh_dir("species.a").string();
    b.out_override = fresh_dir("species.b").string();
    const RunResult ra = run_scenario(sc, a);
    const RunResult rb = run_scenario(load_scenario(p2doc), b);
    CHECK(json::parse(slurp(ra.output_dir / "chsh.json"))["s_hat"] ==
          json::parse(slurp(rb.output_dir / "chsh.json"))["s_hat"]);

    // same-species pairs keep the requested model
    json same = chsh_doc(20000);
    same["parameters"]["pair_species"] = {"proton", "proton"};
    CHECK(manifest_preview(load_scenario(same))["conventions"]["model"] == "P1");
}

TEST_CASE("shipped example scenarios all validate") {
    const fs::path dir = fs::path(WPLAB_SOURCE_DIR) / "scenarios";
    REQUIRE(fs::is_directory(dir));
    int n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        const Scenario sc = load_scenario_file(entry.path());
        CHECK(!scenario_digest(sc, sc.master_seed).empty());
        ++n;
    }
    CHECK(n >= 6);
}

TEST_CASE("cli entry point maps errors to exit codes") {
    const fs::path dir = fresh_dir("cli");
    fs::create_directories(dir);
    const fs::path good = dir / "good.json";
    const fs::path bad = dir / "bad.json";
    write_text_file(good, stats_doc().dump(2));
    json broken = stats_doc();
    broken["parameters"]["beta"] = -1.0;
    write_text_file(bad, broken.dump(2));

    const auto run_cli = [](std::vector<std::string> args) {
        std::vector<const char*> argv{"wplab"};
        for (const auto& a : args) argv.push_back(a.c_str());
        return cli_main(static_cast<int>(argv.size()), argv.data());
    };

    const std::string out1 = (dir / "out1").string();
    CHECK(run_cli({"run", good.string(), "--out", out1}) == 0);
    CHECK(fs::exists(fs::path(out1) / "manifest.json"));
    CHECK(run_cli({"run", good.string(), "--out", out1}) == 4);          // exists, no --force
    CHECK(run_cli({"run", good.string(), "--out", out1, "--force"}) == 0);
    CHECK(run_cli({"run", bad.string(), "--out", (dir / "out2").string()}) == 2);
    CHECK(run_cli({"run", (dir / "missing.json").string()}) == 2);
    CHECK_FALSE(fs::exists(dir / "out2"));
}
