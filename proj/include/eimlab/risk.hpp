#pragma once

// Scenario-based CVaR/VaR computation, prudential reserve checks, financing
// feasibility checks, and the expected-value premium helper. Two CVaR
// evaluators exist on purpose: the closed-form sorted-tail computation below
// is the test oracle, while the LP form (same rows the MILPs embed) lives in
// cvar_lp for equivalence checks. All functions here are pure.

#include "eimlab/model.hpp"

#include <span>
#include <vector>

namespace eimlab {

struct RiskAssessment {
    double var = 0.0;  // z, the alpha-quantile of profit
    double cvar = 0.0; // tail expectation below the quantile
    std::vector<double> tail_deviations; // max(0, z - profit) per scenario
    double mean_profit = 0.0;
    double confidence = 0.0;
};

// Closed-form Rockafellar-Uryasev evaluation: the worst (1-alpha) probability
// mass is averaged, with fractional inclusion of the scenario sitting on the
// quantile. probs must sum to 1; throws std::invalid_argument otherwise or on
// an empty scenario set.
RiskAssessment cvar(std::span<const double> profits, std::span<const double> probs, double alpha);

// Same quantity via the optimization form (Eqs. of the scenario LP), solved
// with the bundled backend. Used by tests to pin LP/closed-form equivalence.
double cvar_lp(std::span<const double> profits, std::span<const double> probs, double alpha);

struct PrudentialResult {
    bool pass = false;
    double slack = 0.0; // cvar + reserves
};

// Prudential reserve test: CVaR of profit must not be worse than -reserves.
PrudentialResult prudential_check(const RiskAssessment& assessment, double reserves);

struct FinancingResult {
    bool equity_pass = false; // mean profit covers wacc * capex
    bool debt_pass = false;   // CVaR covers debt service
    double equity_slack = 0.0;
    double debt_slack = 0.0;
    bool pass() const { return equity_pass && debt_pass; }
};

FinancingResult financing_check(double mean_profit, double cvar_value, const GeneratorTech& tech,
                                double capacity);

// Expected-value premium principle: premium = (1 + loading) * expected payout.
// A sizing helper for configuring strip premium rates; never applied
// implicitly anywhere.
double expected_value_premium(double expected_annual_payout_per_mw_peak, double loading);

} // namespace eimlab
