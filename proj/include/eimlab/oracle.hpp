#pragma once

// Independent brute-force and analytic oracles used by tests and audits.
// None of these touch the solver substrate: dispatch is hand-stacked merit
// order, CVaR is the closed form, and the decision problems are enumerated
// exhaustively. Shared input types are the only overlap with the engines
// they validate.

#include "eimlab/gmp.hpp"
#include "eimlab/ins.hpp"
#include "eimlab/model.hpp"

#include <span>
#include <vector>

namespace eimlab::oracle {

struct RefUnit {
    double cost = 0.0;  // $/MWh
    double limit = 0.0; // capacity * availability, MW
};

struct RefStrip {
    double demand = 0.0;    // MW
    double shed_cost = 0.0; // $/MWh
};

struct RefDispatch {
    double price = 0.0;
    std::vector<double> dispatch;     // per unit
    std::vector<double> shed;         // per strip
    std::vector<double> mu_up_gen, mu_lo_gen, mu_up_shed, mu_lo_shed;
    double cost = 0.0;                // objective value
};

// Single-interval analytic merit-order dispatch with duals. Ties between
// equal-cost units are filled in index order; shedding starts from the
// cheapest compensation value.
RefDispatch reference_dispatch(std::span<const RefUnit> units, std::span<const RefStrip> strips);

struct GridSearchResult {
    double capacity = 0.0;
    double utility = 0.0;
    bool financeable = true;            // false only for the 0 MW fallback
    std::vector<double> scenario_profit;
    std::size_t evaluations = 0;
};

// Exhaustive capacity search for the acting generator: every grid point is
// evaluated by analytic re-dispatch of all scenarios, closed-form CVaR and
// the financing checks. Grid size is capped at 1e5 points.
GridSearchResult grid_search_gmp(const GmpInstance& instance, std::span<const double> grid);

// Convenience: the full step grid {0, step, ..., step*(2^bits - 1)}.
std::vector<double> full_capacity_grid(const GeneratorTech& tech);

struct InsEnumerateResult {
    std::vector<int> contracts;
    std::vector<double> contracted_capacity;
    double utility = 0.0;
    std::vector<double> scenario_profit;
    std::size_t evaluations = 0;
};

// Exact INS maximization by enumerating contract sets and candidate-capacity
// grids with the analytic gamma formula for the requested linking mode.
InsEnumerateResult ins_enumerate(const InsInput& input, GammaLink link);

// From-scratch Ward agglomeration: at every step the increase in total
// within-cluster variance of each candidate merge is recomputed from the raw
// feature vectors (no Lance-Williams recursion). Returns the merge sequence
// as pairs of cluster ids (id = smallest member index).
std::vector<std::pair<int, int>> ward_reference_merges(
    const std::vector<std::vector<double>>& features, std::size_t k);

} // namespace eimlab::oracle
