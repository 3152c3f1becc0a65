#pragma once

// Single-level MILP recast of one independent generator's bilevel capacity
// problem: risk-averse mean-CVaR objective over scenario profits, financing
// constraints, embedded lower-level dispatch (primal rows, dual rows and a
// per-scenario strong-duality row), the operating margin rewritten through
// the complementary-slackness identity (lambda - Cv) p = cap * A * mu_up,
// capacity discretized by a binary expansion, and every bit x dual product
// replaced by its McCormick envelope (exact for binary x bounded-continuous).
//
// Rep-day weighting is folded into the lower-level objective, so embedded
// duals live in "weighted" units: lambda_w = w_t * price. Extraction divides
// the weights back out.
//
// Product layout is selectable: per_interval products (one per bit and
// interval) follow the formulation literally; per_scenario products first
// aggregate M_w = sum_t A_t mu_up_t, which both the profit and the
// strong-duality row consume, and linearize bit x M_w instead. The two are
// algebraically identical at integer points; the aggregate form keeps big
// models tractable.

#include "eimlab/dispatch.hpp"
#include "eimlab/model.hpp"
#include "eimlab/risk.hpp"
#include "eimlab/solver/model.hpp"

#include <memory>
#include <vector>

namespace eimlab {

struct GmpInstance {
    const Market* market = nullptr;
    std::size_t acting = 0;                // unit index of the deciding generator
    std::vector<double> rival_capacity;    // per unit; entry for `acting` ignored

    double rival_cap(std::size_t g) const {
        return rival_capacity.empty() ? market->units[g].capacity : rival_capacity[g];
    }
};

// One column of the embedded lower level: the acting unit (always block 0)
// or a rival; flat-availability rivals of the same tech are merged, with
// rep_unit pointing at one representative market unit.
struct GmpBlockUnit {
    std::size_t rep_unit = 0;
    int tech_index = -1;
    double capacity = 0.0; // merged rival MW; unused for the acting block
    bool is_acting = false;
};

// Lower-level block list for an instance (exposed for tests/audits).
std::vector<GmpBlockUnit> gmp_block_units(const GmpInstance& instance);

struct GmpModel {
    solver::ModelHandle model;
    std::vector<GmpBlockUnit> blocks;
    // Index maps for extraction; all per scenario omega, g = block index.
    int cap_var = -1;
    int cvar_var = -1;
    std::vector<int> bit_vars;
    std::vector<int> profit_vars;                      // [omega]
    std::vector<std::vector<int>> p_vars;              // [omega][g*T+t]
    std::vector<std::vector<int>> shed_vars;           // [omega][s*T+t]
    std::vector<std::vector<int>> lambda_vars;         // [omega][t]
    std::vector<std::vector<int>> mu_up_gen_vars;      // [omega][g*T+t]
    std::vector<std::vector<int>> mu_up_shed_vars;     // [omega][s*T+t]
    std::vector<std::vector<int>> product_vars;        // [omega][k*T+t] or [omega][k]
    std::size_t n_shed_vars = 0;                       // strips or 1 (capped)
};

struct GmpSolution {
    double capacity = 0.0;
    std::vector<int> bits;
    bool feasible() const {
        return status == solver::Status::optimal || status == solver::Status::gap_reached;
    }
    std::vector<double> scenario_profit; // $ per scenario-year
    RiskAssessment risk;
    double utility = 0.0;
    solver::Status status = solver::Status::iteration_limit;
    double gap = 0.0;
    std::int64_t iterations = 0, nodes = 0;
    std::vector<DispatchOutcome> embedded; // LL blocks in natural units
    // Envelope product values at the incumbent, [omega][k*T+t] (per-interval
    // mode) or [omega][k] (aggregated mode); audited for McCormick exactness.
    std::vector<std::vector<double>> products;
};

// Builds the MILP. Throws std::invalid_argument when a dual bound needed by
// the envelopes would be non-finite (price cap / compensation values give the
// ceiling, so this only fires on broken configs).
GmpModel build_gmp(const GmpInstance& instance);

GmpSolution solve_gmp(const GmpInstance& instance, double gap);

struct GmpAudit {
    double max_profit_divergence_rel = 0.0; // embedded vs re-cleared profits
    double max_lemma1_residual = 0.0;
    double max_slackness_residual = 0.0;
    double max_envelope_violation = 0.0;    // |product - bit * factor| at incumbent
    FinancingResult financing;
    bool capacity_on_grid = false;
};

// Independent re-clearing of the dispatch at the returned capacity through
// the dispatch engine, term-by-term profit recomputation, Lemma-1 and
// envelope-exactness checks.
GmpAudit audit_solution(const GmpInstance& instance, const GmpSolution& solution);

} // namespace eimlab
