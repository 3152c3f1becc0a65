#pragma once

// End-to-end case runs and report generation. Everything written into the
// artifact directory is derived deterministically from config plus seed;
// wall-clock timings go to a separate stats file excluded from determinism
// guarantees. Reports carry the reliability and cost metrics of the study
// protocol: capacity by kind, annual lost load (mean and P95) per strip,
// value of lost load, insurer profit distribution, consumer cost split, and
// price-duration data.

#include "eimlab/config.hpp"
#include "eimlab/dispatch.hpp"
#include "eimlab/equilibrium.hpp"

#include <optional>
#include <string>
#include <vector>

namespace eimlab {

struct StripLostLoad {
    std::string id;
    double mean_pct = 0.0; // % of strip annual energy
    double p95_pct = 0.0;
};

struct ScenarioPrices {
    std::string scenario;
    double hours_at_cap = 0.0;
    double average_price = 0.0;     // demand-weighted $/MWh
    std::vector<double> band_hours; // per configured band
};

struct RunReport {
    std::string design;
    std::string status;
    double total_capacity = 0.0;
    double independent_capacity = 0.0;
    double contracted_capacity = 0.0;
    double vre_capacity = 0.0;
    std::vector<StripLostLoad> lost_load;
    double voll_mean = 0.0; // $ per year
    double voll_p95 = 0.0;
    bool has_iolr = false;
    double iolr_mean_profit = 0.0;
    double iolr_cvar = 0.0;
    double consumer_energy_cost = 0.0;
    double consumer_insurance_cost = 0.0;
    std::vector<double> price_bands;
    std::vector<ScenarioPrices> prices;
    OscillationReport oscillation;
    std::int64_t total_sweeps = 0;
    int outer_iterations = 0;
    bool multistart_agree = true;
};

struct RunResult {
    RunReport report;
    EquilibriumState state;
    int exit_code = 0; // 0 ok, 1 validation, 2 solver, 3 non-convergence
};

// Full pipeline: ingest, cluster, equilibrate (multi-start per config),
// report, and write artifacts (report.json, table.csv, dispatch.csv,
// price_duration.csv, equilibrium.json, trace.jsonl, scenario_set.json,
// config.json, stats.json) into out_dir.
RunResult run_case(const RunConfig& config, const std::string& out_dir);

// Convenience: load config, apply an optional design override, run.
RunResult run_case_file(const std::string& config_path, const std::string& out_dir,
                        std::optional<MarketDesign> design_override);

struct SweepPoint {
    double axis_value = 0.0;
    bool failed = false;
    std::string error;
    RunReport report;
};

// One run per axis value; rps resizes the VRE, competitors replicates the
// independent fleet round-robin over the configured techs. Per-point
// failures are recorded and the sweep continues.
std::vector<SweepPoint> sweep(const RunConfig& base, const std::string& axis,
                              const std::vector<double>& values, const std::string& out_dir);

// Price-duration table (hours at cap, configured bands, scenario averages).
void emit_duration_csv(const RunReport& report, const std::string& path);

// Recomputes the report from the raw artifacts in a run directory and
// returns it; the closure test compares this against the stored report.json.
RunReport regenerate_report(const std::string& run_dir);

void write_report_json(const RunReport& report, const std::string& path);
RunReport read_report_json(const std::string& path);

} // namespace eimlab
