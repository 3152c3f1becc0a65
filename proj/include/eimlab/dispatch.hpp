#pragma once

// Spot-market clearing. Each scenario is an independent merit-order LP;
// primal and dual values are both retained so the strong-duality and
// complementary-slackness identities can be certified on every solve.
//
// Two shed-cost modes:
//   paper_literal     — one shed variable per strip, penalized at its
//                       compensation value; prices can reach the highest
//                       compensation value.
//   capped_settlement — one aggregate shed variable per interval, penalized
//                       at the administrative price cap, so the clearing
//                       price never exceeds the cap; per-strip curtailment is
//                       an ex-post allocation (allocate_shed).

#include "eimlab/model.hpp"

#include <cstdint>
#include <vector>

namespace eimlab {

struct DispatchOutcome {
    std::size_t scenario = 0;
    ShedCostMode mode = ShedCostMode::capped_settlement;
    std::size_t n_intervals = 0;

    std::vector<double> price;         // [t] lambda, $/MWh
    std::vector<double> settled_price; // [t] min(lambda, cap)
    std::vector<std::vector<double>> dispatch; // [unit][t] MW
    // LP shed variables: per strip in paper_literal mode, a single aggregate
    // series in capped_settlement mode.
    std::vector<std::vector<double>> shed_lp;  // [shed var][t] MW
    std::vector<double> shed_cost;             // [shed var] $/MWh penalty
    std::vector<double> shed_ub;               // cached bound sums per t (capped mode)
    std::vector<double> total_shed;            // [t] MW

    std::vector<std::vector<double>> mu_up_gen, mu_lo_gen;   // [unit][t]
    std::vector<std::vector<double>> mu_up_shed, mu_lo_shed; // [shed var][t]

    // Capacity * availability actually used in the LP, for audits. [unit][t]
    std::vector<std::vector<double>> gen_limit;
    std::vector<double> gen_cost;                  // [unit] variable cost $/MWh
    std::vector<std::vector<double>> strip_demand; // [strip][t]
};

// Per-interval curtailment split across strips after the ordering rule.
struct ShedAllocation {
    EomAllocation random_mode = EomAllocation::pro_rata;
    std::vector<std::vector<double>> shed; // [strip][t] MW
};

enum class AllocationMode { priority, pro_rata, seeded_random };

// Clears one scenario at the given fixed capacities. The LP is feasible by
// construction (shedding everything is always available); a backend report
// of infeasibility is an internal error and throws.
DispatchOutcome clear_scenario(const Market& market, std::size_t scenario, ShedCostMode mode);

// |primal - dual| / max(1, |primal|) with both objectives recomputed from the
// raw solution arrays.
double verify_strong_duality(const DispatchOutcome& outcome);

struct Lemma1Report {
    double max_residual = 0.0;       // max |lambda p - Cvc p - cap A mu_up|
    double max_slackness = 0.0;      // max of |(p - cap A) mu_up| and |mu_lo p|
};

Lemma1Report verify_lemma1(const DispatchOutcome& outcome);

ShedAllocation allocate_shed(const DispatchOutcome& outcome, const Market& market,
                             AllocationMode mode, std::uint64_t seed);

struct Settlement {
    double consumer_energy_cost = 0.0;        // $ per year, probability-weighted
    std::vector<double> generator_margin;     // [unit] $ per year, probability-weighted
    std::vector<double> served_energy;        // [scenario] MWh per year
    std::vector<double> shed_energy;          // [scenario] MWh per year
};

// Applies the administrative cap and aggregates energy cashflows across all
// cleared scenarios using rep-day weights and scenario probabilities.
Settlement settle(const Market& market, const std::vector<DispatchOutcome>& outcomes);

} // namespace eimlab
