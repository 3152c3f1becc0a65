#pragma once

// The insurer-of-last-resort decision problem: choose which strips to insure
// (binary Q per strip) and how much generation capacity to back with
// availability contracts, maximizing mean-CVaR utility subject to
// profitability-in-expectation and the prudential reserve constraint. The
// payout bilinearity gamma * Q is McCormick-linearized with the ex-ante shed
// as the envelope bound.
//
// Two linking modes for how contracted MW reduces curtailment:
//   paper_literal_link — per strip independently,
//                        gamma >= ex_ante_shed_strip - total contracted MW;
//   cascade_link       — the contracted MW is shared once across strips and
//                        restores high-compensation strips first (exact, via
//                        one auxiliary binary per scarce interval and strip).

#include "eimlab/model.hpp"
#include "eimlab/risk.hpp"
#include "eimlab/solver/model.hpp"

#include <vector>

namespace eimlab {

enum class GammaLink { paper_literal_link, cascade_link };

struct InsCandidate {
    int tech_index = -1;   // availability price and step come from the tech
    int expansion_bits = 4;
};

struct InsInput {
    const Market* market = nullptr;
    // Ex-ante curtailment from the market equilibrium, [omega][strip][t], MW.
    std::vector<std::vector<std::vector<double>>> ex_ante_shed;
    std::vector<InsCandidate> candidates;
};

struct InsModel {
    solver::ModelHandle model;
    std::vector<int> q_vars;                         // per strip
    std::vector<int> cap_vars;                       // per candidate
    std::vector<int> profit_vars;                    // per omega
    int cvar_var = -1;
    // gamma vars only exist where ex-ante shed is positive.
    std::vector<std::vector<std::vector<int>>> gamma_vars; // [omega][strip][t] or -1
};

struct IolrDecision {
    std::vector<int> contracts;               // Q per strip
    std::vector<double> contracted_capacity;  // per candidate, MW
    std::vector<std::vector<std::vector<double>>> ex_post_shed; // [omega][strip][t]
    // Term-by-term recomputation (premiums - payouts - availability), exact
    // by construction; milp_scenario_profit carries the raw solver values.
    std::vector<double> scenario_profit;      // $ per scenario-year
    std::vector<double> milp_scenario_profit; // $ per scenario-year (solver)
    RiskAssessment risk;
    double utility = 0.0;
    solver::Status status = solver::Status::iteration_limit;
    double gap = 0.0;
    std::int64_t iterations = 0, nodes = 0;
};

InsModel build_ins(const InsInput& input, GammaLink link, bool eom);

IolrDecision solve_ins(const InsInput& input, GammaLink link, bool eom, double gap);

struct InsAudit {
    double max_profit_divergence = 0.0;  // recomputed vs model profit, $
    double max_envelope_violation = 0.0; // |payout product - gamma * Q|
    double prudential_slack = 0.0;       // cvar + reserves
    double expectation_slack = 0.0;      // mean profit (must be >= 0)
    bool pass = false;
};

// Term-by-term recomputation of every scenario profit (premium income minus
// payouts minus availability payments), closed-form CVaR re-evaluation, and
// constraint slack reporting.
InsAudit audit_ins(const IolrDecision& decision, const InsInput& input);

// Annualized availability-contract price for a candidate, $/MW-year.
double availability_price(const Market& market, const InsCandidate& candidate);

} // namespace eimlab
