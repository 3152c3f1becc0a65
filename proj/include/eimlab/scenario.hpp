#pragma once

// Trace ingestion, VRE capacity sizing against a renewable portfolio
// standard, and reduction of scenario-years to weighted representative days
// via Ward hierarchical clustering (Lance-Williams recursion; the O(n^3)
// from-scratch reference lives in the oracle suite).

#include "eimlab/model.hpp"

#include <string>
#include <vector>

namespace eimlab {

struct RawTrace {
    std::string scenario_id;
    std::vector<double> timestamps;       // half-hourly instants (epoch or index)
    std::vector<double> system_demand;    // MW
    std::vector<double> vre_availability; // [0,1]
    std::size_t n_days() const { return system_demand.size() / 48; }
};

// CSV with header timestamp,demand_mw,vre_availability and an optional
// leading scenario column. Throws std::runtime_error naming the offending
// line on malformed rows, negative demand, availability outside [0,1],
// uneven interval spacing, or a series that is not whole days.
std::vector<RawTrace> load_traces(const std::string& path);

// Capacity such that capacity x mean availability x hours matches
// rps x expected annual demand energy.
double size_vre_capacity(const std::vector<RawTrace>& traces, double rps);

struct WardResult {
    std::vector<int> assignment;                  // day -> cluster index (0..k-1)
    std::vector<std::vector<double>> centroids;   // representative feature vectors
    std::vector<double> weights;                  // cluster cardinalities
    std::vector<std::pair<int, int>> merges;      // sequence of (idA, idB), idA < idB
};

// Agglomerative Ward minimum-variance clustering until k clusters remain.
// Deterministic: ties merge the lowest-index pair (cluster id = smallest
// member index).
WardResult ward_cluster(const std::vector<std::vector<double>>& features, std::size_t k);

struct StripSpec {
    std::string id;
    double share = 0.0;              // fraction of system demand
    double compensation_value = 0.0; // $/MWh
    double premium_rate = 0.0;       // $/MW-peak-year
};

struct ClusterDiagnostics {
    // Per scenario: |weighted rep-day energy - source energy| / source.
    std::vector<double> energy_error;
    double tolerance = 0.02;
    bool within_tolerance() const {
        for (double e : energy_error)
            if (e > tolerance) return false;
        return true;
    }
};

struct BuildOptions {
    std::size_t rep_days = 12;
    bool medoid = false; // representative = nearest member instead of centroid
    double energy_tolerance = 0.02;
};

struct ScenarioBuild {
    ScenarioSet set;
    std::vector<DemandStrip> strips;
    ClusterDiagnostics diagnostics;
};

// Splits system demand into strips, clusters each scenario-year, sizes VRE,
// and assembles the ScenarioSet with uniform scenario probabilities. Strip
// peak demand is taken from the raw traces (billing basis), not the
// representative days.
ScenarioBuild build_scenario_set(const std::vector<RawTrace>& traces,
                                 const std::vector<StripSpec>& strips, double rps,
                                 const BuildOptions& options);

// Self-describing JSON round trip for reproducible runs.
void save_scenario_set(const ScenarioBuild& build, const std::string& path);
ScenarioBuild load_scenario_set(const std::string& path);

} // namespace eimlab
