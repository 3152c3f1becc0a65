#pragma once

// Declarative run configuration: one JSON document describes the market
// design, insurer, technologies, units, demand strips and trace inputs.
// docs/config-schema.md is the versioned schema reference.

#include "eimlab/equilibrium.hpp"
#include "eimlab/model.hpp"
#include "eimlab/scenario.hpp"

#include <string>
#include <vector>

namespace eimlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int schema_version = 1;
    Market market;                 // fully assembled and validated
    EquilibriumOptions equilibrium;
    std::vector<std::string> start_specs; // "zero" | "max" | "random"
    std::vector<double> price_bands;      // $/MWh edges for duration tables
    ClusterDiagnostics diagnostics;       // from the scenario build
    std::string source_path;              // where the config was loaded from
    std::string raw_json;                 // resolved config, re-emittable
};

// Loads and assembles a run configuration. Traces or a prebuilt scenario-set
// document are resolved relative to the config file. Throws ConfigError on
// structural problems; model-invariant violations are reported through
// validate_model by the caller.
RunConfig load_config(const std::string& path);

// Expands the start specifications into concrete capacity vectors for the
// independent units (seeded deterministically from the market seed).
std::vector<std::vector<double>> expand_starts(const RunConfig& config);

} // namespace eimlab
