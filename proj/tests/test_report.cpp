#include "doctest.h"

#include "eimlab/report.hpp"

#include <filesystem>
#include <fstream>

using namespace eimlab;

namespace {

namespace fs = std::filesystem;

std::string repo_config(const char* name) {
    // Tests run from the build directory; configs sit next to it.
    for (const char* base : {"../configs/", "configs/", "../../configs/"}) {
        const fs::path p = fs::path(base) / name;
        if (fs::exists(p)) return p.string();
    }
    throw std::runtime_error(std::string("config not found: ") + name);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("toy EOM case runs end to end with no insurance cost") {
    const RunResult res = run_case_file(repo_config("toy.json"), "/tmp/eimlab_test_eom", MarketDesign::EOM);
    REQUIRE(res.exit_code == 0);
    CHECK(res.report.design == "eom");
    CHECK(res.report.consumer_insurance_cost == doctest::Approx(0.0));
    CHECK(!res.report.has_iolr);
    for (const auto& s : res.report.lost_load) {
        CHECK(s.mean_pct >= 0.0);
        CHECK(s.mean_pct <= 100.0);
        CHECK(s.p95_pct >= s.mean_pct - 1e-9);
    }
    for (const char* f : {"report.json", "table.csv", "dispatch.csv", "price_duration.csv",
                          "equilibrium.json", "trace.jsonl", "scenario_set.json", "config.json",
                          "stats.json", "validation.txt"})
        CHECK(fs::exists(fs::path("/tmp/eimlab_test_eom") / f));
}

TEST_CASE("toy EIM cascade keeps essential losses below non-essential") {
    const RunResult res = run_case_file(repo_config("toy.json"), "/tmp/eimlab_test_eim", MarketDesign::EIM);
    REQUIRE(res.exit_code == 0);
    REQUIRE(res.report.lost_load.size() == 2);
    CHECK(res.report.lost_load[0].mean_pct <= res.report.lost_load[1].mean_pct + 1e-9);
    // Insurance cost equals the sum of contracted premiums.
    double expect = 0.0;
    for (std::size_t d = 0; d < res.state.market.strips.size(); ++d)
        if (!res.state.iolr.contracts.empty() && res.state.iolr.contracts[d])
            expect += res.state.market.strips[d].premium_rate * res.state.market.strips[d].peak_demand;
    CHECK(res.report.consumer_insurance_cost == doctest::Approx(expect));
}

TEST_CASE("identical config and seed produce byte-identical reports") {
    run_case_file(repo_config("toy.json"), "/tmp/eimlab_det_a", MarketDesign::EIM);
    run_case_file(repo_config("toy.json"), "/tmp/eimlab_det_b", MarketDesign::EIM);
    CHECK(slurp("/tmp/eimlab_det_a/report.json") == slurp("/tmp/eimlab_det_b/report.json"));
    CHECK(slurp("/tmp/eimlab_det_a/table.csv") == slurp("/tmp/eimlab_det_b/table.csv"));
    CHECK(slurp("/tmp/eimlab_det_a/dispatch.csv") == slurp("/tmp/eimlab_det_b/dispatch.csv"));
}

TEST_CASE("reports regenerate from raw artifacts") {
    const RunResult res = run_case_file(repo_config("toy.json"), "/tmp/eimlab_regen", MarketDesign::EIM);
    REQUIRE(res.exit_code == 0);
    const RunReport regen = regenerate_report("/tmp/eimlab_regen");
    const RunReport stored = read_report_json("/tmp/eimlab_regen/report.json");
    CHECK(regen.total_capacity == doctest::Approx(stored.total_capacity));
    CHECK(regen.voll_mean == doctest::Approx(stored.voll_mean).epsilon(1e-9));
    CHECK(regen.consumer_energy_cost == doctest::Approx(stored.consumer_energy_cost).epsilon(1e-9));
    CHECK(regen.consumer_insurance_cost == doctest::Approx(stored.consumer_insurance_cost));
    CHECK(regen.iolr_mean_profit == doctest::Approx(stored.iolr_mean_profit).epsilon(1e-9));
    REQUIRE(regen.lost_load.size() == stored.lost_load.size());
    for (std::size_t d = 0; d < regen.lost_load.size(); ++d)
        CHECK(regen.lost_load[d].mean_pct == doctest::Approx(stored.lost_load[d].mean_pct).epsilon(1e-9));
    REQUIRE(regen.prices.size() == stored.prices.size());
    for (std::size_t w = 0; w < regen.prices.size(); ++w) {
        CHECK(regen.prices[w].hours_at_cap == doctest::Approx(stored.prices[w].hours_at_cap));
        CHECK(regen.prices[w].average_price == doctest::Approx(stored.prices[w].average_price).epsilon(1e-9));
    }
}

TEST_CASE("price duration bands account for every hour") {
    const RunResult res = run_case_file(repo_config("toy.json"), "/tmp/eimlab_dur", MarketDesign::EOM);
    REQUIRE(res.exit_code == 0);
    REQUIRE(!res.report.prices.empty());
    for (const auto& p : res.report.prices) {
        double total = 0.0;
        for (double h : p.band_hours) total += h;
        CHECK(total > 0.0);
        CHECK(p.hours_at_cap <= total + 1e-9);
        CHECK(p.average_price >= 0.0);
    }
    emit_duration_csv(res.report, "/tmp/eimlab_dur/duration_again.csv");
    std::ifstream f("/tmp/eimlab_dur/duration_again.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header.rfind("scenario,hours_at_cap,average_price", 0) == 0);
}

TEST_CASE("sweep records one report per point and keeps going") {
    const RunConfig rc = load_config(repo_config("toy.json"));
    const auto points = sweep(rc, "competitors", {1.0, 2.0}, "/tmp/eimlab_sweep");
    REQUIRE(points.size() == 2);
    for (const auto& pt : points) CHECK(!pt.failed);
    CHECK(fs::exists("/tmp/eimlab_sweep/sweep.csv"));
    // Unknown axis is recorded as a failure, not an exception.
    const auto bad = sweep(rc, "voltage", {1.0}, "/tmp/eimlab_sweep_bad");
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].failed);
}
