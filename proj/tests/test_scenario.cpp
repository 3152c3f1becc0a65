#include "doctest.h"

#include "eimlab/oracle.hpp"
#include "eimlab/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace eimlab;

namespace {

std::string write_fixture_csv(const std::string& name, int scenarios, int days,
                              unsigned seed = 17) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream f(path);
    f << "scenario,timestamp,demand_mw,vre_availability\n";
    for (int s = 0; s < scenarios; ++s)
        for (int t = 0; t < days * 48; ++t)
            f << "s" << (s + 1) << "," << t * 1800 << "," << 800.0 + 400.0 * U(rng) << ","
              << 0.2 + 0.6 * U(rng) << "\n";
    return path.string();
}

} // namespace

TEST_CASE("load_traces parses a two-scenario fixture") {
    const std::string path = write_fixture_csv("eimlab_traces.csv", 2, 2);
    const auto traces = load_traces(path);
    REQUIRE(traces.size() == 2);
    CHECK(traces[0].system_demand.size() == 96);
    CHECK(traces[1].system_demand.size() == 96);
    CHECK(traces[0].scenario_id == "s1");
    std::filesystem::remove(path);
}

TEST_CASE("load_traces reports the offending row") {
    const auto path = std::filesystem::temp_directory_path() / "eimlab_bad.csv";
    {
        std::ofstream f(path);
        f << "timestamp,demand_mw,vre_availability\n";
        for (int t = 0; t < 48; ++t) f << t << "," << (t == 30 ? -5.0 : 100.0) << ",0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_traces(path.string()),
                         "trace parse error at line 32: negative demand", std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("load_traces rejects mixed interval lengths") {
    const auto path = std::filesystem::temp_directory_path() / "eimlab_mixed.csv";
    {
        std::ofstream f(path);
        f << "timestamp,demand_mw,vre_availability\n";
        for (int t = 0; t < 48; ++t) f << (t < 20 ? t * 1800 : t * 1800 + 900) << ",100,0.5\n";
    }
    CHECK_THROWS(load_traces(path.string()));
    std::filesystem::remove(path);
}

TEST_CASE("vre sizing solves the energy balance") {
    RawTrace tr;
    tr.scenario_id = "s1";
    tr.system_demand.assign(48 * 10, 1000.0);
    tr.vre_availability.assign(48 * 10, 0.5);
    CHECK(size_vre_capacity({tr}, 0.0) == doctest::Approx(0.0));
    CHECK(size_vre_capacity({tr}, 0.4) == doctest::Approx(800.0).epsilon(1e-12));
    tr.vre_availability.assign(48 * 10, 0.0);
    CHECK_THROWS(size_vre_capacity({tr}, 0.4));
}

TEST_CASE("ward clustering: singletons and separable regimes") {
    std::vector<std::vector<double>> days;
    for (int i = 0; i < 6; ++i) days.push_back({static_cast<double>(i), 0.0});
    const WardResult all = ward_cluster(days, 6);
    CHECK(all.merges.empty());
    for (double w : all.weights) CHECK(w == doctest::Approx(1.0));

    // 10 copies of A and 10 of B: two pure clusters of weight 10.
    days.clear();
    for (int i = 0; i < 10; ++i) days.push_back({0.0, 1.0});
    for (int i = 0; i < 10; ++i) days.push_back({9.0, -3.0});
    const WardResult two = ward_cluster(days, 2);
    REQUIRE(two.weights.size() == 2);
    CHECK(two.weights[0] == doctest::Approx(10.0));
    CHECK(two.weights[1] == doctest::Approx(10.0));
    for (int i = 0; i < 10; ++i) CHECK(two.assignment[static_cast<std::size_t>(i)] == two.assignment[0]);
    for (int i = 10; i < 20; ++i) CHECK(two.assignment[static_cast<std::size_t>(i)] == two.assignment[10]);
    CHECK(two.assignment[0] != two.assignment[10]);
}

TEST_CASE("ward merge sequence matches the from-scratch reference") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> U(-1, 1);
    for (unsigned rep = 0; rep < 3; ++rep) {
        std::vector<std::vector<double>> days(30, std::vector<double>(8));
        for (auto& d : days)
            for (auto& v : d) v = U(rng);
        const WardResult mine = ward_cluster(days, 4);
        const auto ref = oracle::ward_reference_merges(days, 4);
        REQUIRE(mine.merges.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(mine.merges[i].first == ref[i].first);
            CHECK(mine.merges[i].second == ref[i].second);
        }
    }
}

TEST_CASE("ward rejects bad k") {
    std::vector<std::vector<double>> days(5, std::vector<double>(3, 0.0));
    CHECK_THROWS(ward_cluster(days, 0));
    CHECK_THROWS(ward_cluster(days, 6));
}

TEST_CASE("build_scenario_set splits strips exactly and conserves energy") {
    const std::string path = write_fixture_csv("eimlab_build.csv", 2, 8);
    const auto traces = load_traces(path);
    std::vector<StripSpec> strips{{"essential", 0.5, 15000.0, 1000.0},
                                  {"non_essential", 0.5, 7500.0, 500.0}};
    BuildOptions opt;
    opt.rep_days = 3;
    const ScenarioBuild build = build_scenario_set(traces, strips, 0.3, opt);

    REQUIRE(build.set.scenarios.size() == 2);
    for (const auto& sc : build.set.scenarios) {
        REQUIRE(sc.rep_days.size() == 3);
        double wsum = 0.0;
        for (const auto& rd : sc.rep_days) wsum += rd.weight;
        CHECK(wsum == doctest::Approx(8.0)); // weights sum to source days
        CHECK(sc.probability == doctest::Approx(0.5));
    }
    // Strip demands sum to system demand at every interval (exactly).
    for (std::size_t w = 0; w < 2; ++w)
        for (std::size_t t = 0; t < build.set.n_intervals(w); ++t) {
            const double sum = build.set.strip_demand(w, 0, t) + build.set.strip_demand(w, 1, t);
            CHECK(build.set.system_demand(w, t) == doctest::Approx(sum).epsilon(1e-15));
        }
    // Centroid representatives preserve annual energy.
    for (double e : build.diagnostics.energy_error) CHECK(e <= 1e-9);
    CHECK(build.diagnostics.within_tolerance());
    // Peak comes from the raw traces.
    double raw_peak = 0.0;
    for (const auto& tr : traces)
        for (double d : tr.system_demand) raw_peak = std::max(raw_peak, d);
    CHECK(build.strips[0].peak_demand == doctest::Approx(raw_peak * 0.5));
    std::filesystem::remove(path);
}

TEST_CASE("single-cluster reduction is the per-interval average") {
    const std::string path = write_fixture_csv("eimlab_avg.csv", 1, 5);
    const auto traces = load_traces(path);
    std::vector<StripSpec> strips{{"all", 1.0, 10000.0, 0.0}};
    BuildOptions opt;
    opt.rep_days = 1;
    const ScenarioBuild build = build_scenario_set(traces, strips, 0.0, opt);
    REQUIRE(build.set.scenarios[0].rep_days.size() == 1);
    const RepDay& rd = build.set.scenarios[0].rep_days[0];
    CHECK(rd.weight == doctest::Approx(5.0));
    for (std::size_t h = 0; h < 48; ++h) {
        double mean = 0.0;
        for (int day = 0; day < 5; ++day) mean += traces[0].system_demand[static_cast<std::size_t>(day) * 48 + h];
        mean /= 5.0;
        CHECK(rd.strip_demand[0][h] == doctest::Approx(mean).epsilon(1e-12));
    }
    std::filesystem::remove(path);
}

TEST_CASE("scenario set JSON round trip") {
    const std::string path = write_fixture_csv("eimlab_rt.csv", 2, 4);
    const auto traces = load_traces(path);
    std::vector<StripSpec> strips{{"essential", 0.5, 15000.0, 1000.0},
                                  {"non_essential", 0.5, 7500.0, 500.0}};
    BuildOptions opt;
    opt.rep_days = 2;
    const ScenarioBuild build = build_scenario_set(traces, strips, 0.25, opt);
    const auto json_path = std::filesystem::temp_directory_path() / "eimlab_ss.json";
    save_scenario_set(build, json_path.string());
    const ScenarioBuild loaded = load_scenario_set(json_path.string());
    CHECK(loaded.set.vre_capacity == doctest::Approx(build.set.vre_capacity));
    REQUIRE(loaded.set.scenarios.size() == build.set.scenarios.size());
    for (std::size_t w = 0; w < build.set.scenarios.size(); ++w)
        for (std::size_t t = 0; t < build.set.n_intervals(w); ++t) {
            CHECK(loaded.set.strip_demand(w, 0, t) == build.set.strip_demand(w, 0, t));
            CHECK(loaded.set.vre_availability(w, t) == build.set.vre_availability(w, t));
        }
    CHECK(loaded.strips[1].premium_rate == build.strips[1].premium_rate);
    std::filesystem::remove(path);
    std::filesystem::remove(json_path);
}
