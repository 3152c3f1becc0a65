#pragma once

// Diagonalization to a market-plus-insurance equilibrium. The inner loop is
// Gauss-Seidel over independent generators in ascending unit order (each
// best response sees rivals' freshest capacities); the outer loop re-clears
// curtailment, re-solves the insurer, and swaps the contracted fleet into
// the market until insurance decisions stop moving.
//
// The ex-ante curtailment handed to the insurer is measured on the market
// WITHOUT the previously contracted units (the insurer's own gamma link
// nets its capacity back out); replacement rather than accumulation of the
// contracted portfolio follows from the same reading. A config switch
// (accumulate_contracts) provides the cumulative alternative.

#include "eimlab/dispatch.hpp"
#include "eimlab/gmp.hpp"
#include "eimlab/ins.hpp"
#include "eimlab/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace eimlab {

enum class EqStatus { converged, oscillating, iteration_limit };

const char* to_string(EqStatus s);

struct SweepRecord {
    int outer = 0;
    int inner = 0;
    std::vector<double> capacity; // per independent unit, after the sweep
    std::vector<double> utility;  // per independent unit
};

struct OuterRecord {
    int outer = 0;
    std::vector<int> contracts;
    std::vector<double> contracted_capacity;
    double iolr_utility = 0.0;
};

struct OscillationReport {
    bool cycling = false;
    int period = 0;              // exact state-revisit period; 0 when none
    double band_low = 0.0;       // total-capacity band over the window
    double band_high = 0.0;
    double average = 0.0;        // running average over the window
    int window_start = 0;        // first sweep index of the analysis window
};

struct EquilibriumState {
    EqStatus status = EqStatus::iteration_limit;
    int outer_count = 0;
    int total_sweeps = 0;
    std::vector<std::size_t> independent_units; // unit indices in the base market
    std::vector<double> independent_capacity;   // final, per independent unit
    IolrDecision iolr;                          // final insurer decision
    std::vector<SweepRecord> trace;             // append-only
    std::vector<OuterRecord> outer_trace;
    OscillationReport oscillation;
    Market market;                              // final market incl. contracted fleet
    std::vector<std::vector<std::vector<double>>> last_ex_ante_shed; // fed to INS
};

// Scripted best responses for a unit: the n-th inner solve returns
// cycle[n % cycle.size()] instead of solving the MILP. A diagnostic hook for
// exercising the oscillation-handling path with a known cycle.
struct ScriptedAgent {
    std::size_t unit = 0;
    std::vector<double> cycle;
};

struct EquilibriumOptions {
    std::vector<InsCandidate> candidates; // insurer's contractable techs (EIM)
    GammaLink link = GammaLink::paper_literal_link;
    bool accumulate_contracts = false;
    std::vector<double> start;            // per independent unit; empty = zeros
    std::vector<ScriptedAgent> scripted;  // empty in production runs
    std::string trace_path;               // JSONL sweep log; empty = no file
};

EquilibriumState run_equilibrium(const Market& base, const EquilibriumOptions& opts);

OscillationReport detect_oscillation(const std::vector<SweepRecord>& trace);

struct DeviationReport {
    std::vector<double> generator_gain; // per independent, relative utility gain
    double iolr_gain = 0.0;             // relative; 0 when skipped (EOM)
    bool iolr_checked = false;
    double max_relative_gain = 0.0;
};

// Re-solves every agent's problem at the fixed point with all others frozen
// and reports the best unilateral improvement found.
DeviationReport verify_equilibrium(const EquilibriumState& state, const EquilibriumOptions& opts);

// Multi-start driver per the calibration protocol: zero, max, and two seeded
// random vectors by default. Returns each run plus whether all converged
// runs agree on final capacities within one step.
struct MultiStartResult {
    std::vector<EquilibriumState> runs;
    bool agree = true;
};

MultiStartResult run_multistart(const Market& base, const EquilibriumOptions& opts,
                                const std::vector<std::vector<double>>& starts);

} // namespace eimlab
