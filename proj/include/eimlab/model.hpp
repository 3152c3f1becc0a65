#pragma once

// Core domain model: generation technologies, units, demand strips, insurer
// and market configuration, plus the derived financial quantities every other
// component relies on. All types are plain value types; once validated they
// are treated as immutable and may be shared freely across threads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eimlab {

// Kind of participant a generating unit represents.
enum class UnitKind { independent, iolr_contracted, fixed_vre };

enum class MarketDesign { EOM, EIM };
enum class ShedCostMode { capped_settlement, paper_literal };
enum class EomAllocation { pro_rata, seeded_random };

// Annuity factor: payment per year per unit of principal for a loan at
// `rate` over `life` years. rate = 0 degenerates to straight-line 1/life.
double annuity_factor(double rate, double life);

struct GeneratorTech {
    std::string name;
    double variable_cost = 0.0;    // $/MWh
    double fixed_cost = 0.0;       // $/MW-year
    double investment_cost = 0.0;  // $/MW
    double asset_life = 20.0;      // years
    double equity_rate = 0.0;      // fraction/year
    double debt_rate = 0.0;        // fraction/year
    double gearing = 0.0;          // debt fraction of capital, [0,1]
    double risk_weight = 0.5;      // beta_g, [0,1]
    double cvar_confidence = 0.95; // alpha_g, (0,1)
    double capacity_step = 25.0;   // MW
    int expansion_bits = 4;        // K
    double annuity = 0.0;          // zeta_g, derived; see finalize()

    // Weighted average cost of capital: r_e(1-kappa) + kappa r_d.
    double wacc() const { return equity_rate * (1.0 - gearing) + gearing * debt_rate; }
    // Annual availability-contract price per MW: fixed cost + annuitized capex.
    double availability_price() const { return fixed_cost + annuity * investment_cost; }
    // Largest capacity representable with the binary expansion.
    double max_capacity() const;
    // Recompute derived fields from the primary ones.
    void finalize() { annuity = annuity_factor(wacc(), asset_life); }
};

double wacc(const GeneratorTech& tech);

struct GeneratorUnit {
    std::string id;
    int tech_index = -1; // into the tech list of the Market
    UnitKind kind = UnitKind::independent;
    double capacity = 0.0; // MW
    // Availability per scenario and interval, values in [0,1]. Empty means
    // flat 1.0 (thermal). fixed_vre units carry the VRE profile.
    std::vector<std::vector<double>> availability;

    double availability_at(std::size_t scenario, std::size_t t) const {
        if (availability.empty()) return 1.0;
        return availability[scenario][t];
    }
    bool has_profile() const { return !availability.empty(); }
};

struct DemandStrip {
    std::string id;
    double compensation_value = 0.0; // C^sh, $/MWh
    double premium_rate = 0.0;       // C^P, $/MW-peak-year
    double peak_demand = 0.0;        // from raw traces (billing basis)
    // Demand per scenario and interval, MW.
    std::vector<std::vector<double>> demand;
};

struct IolrConfig {
    double technical_reserves = 0.0; // phi, $
    double cvar_confidence = 0.995;  // alpha_i
    double risk_weight = 0.5;        // beta_i
};

struct MarketConfig {
    MarketDesign design = MarketDesign::EIM;
    double price_cap = 2000.0; // $/MWh
    double rps = 0.0;
    ShedCostMode shed_cost_mode = ShedCostMode::capped_settlement;
    EomAllocation eom_allocation = EomAllocation::pro_rata;
    double optimality_gap = 1e-3;
    double eps_i = 0.0;  // insurance contract delta tolerance
    double eps_j = 25.0; // contracted capacity delta tolerance, MW
    double eps_k = 25.0; // independent capacity delta tolerance, MW
    int max_outer_iters = 10;
    int max_inner_iters = 25;
    std::uint64_t seed = 0;
    // GMP model option: per-interval McCormick products (the literal
    // expansion) or per-scenario aggregated products. Both are exact at
    // integer solutions; aggregation keeps large models tractable.
    bool aggregate_dual_products = false;
};

struct Violation {
    std::string where;
    std::string what;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

struct RepDay {
    // 48 half-hourly intervals.
    std::vector<std::vector<double>> strip_demand; // [strip][48]
    std::vector<double> vre_availability;          // [48]
    double weight = 1.0;                           // days represented
};

struct Scenario {
    std::string id;
    double probability = 0.0;
    std::vector<RepDay> rep_days;
};

struct ScenarioSet {
    std::vector<Scenario> scenarios;
    double vre_capacity = 0.0; // MW
    std::size_t n_strips = 0;

    std::size_t n_scenarios() const { return scenarios.size(); }
    // Flattened interval count for one scenario (48 x rep days).
    std::size_t n_intervals(std::size_t scenario) const {
        return scenarios[scenario].rep_days.size() * 48;
    }
    // Hours represented by flattened interval t (day weight x 0.5 h).
    double interval_weight(std::size_t scenario, std::size_t t) const {
        return scenarios[scenario].rep_days[t / 48].weight * 0.5;
    }
    double vre_availability(std::size_t scenario, std::size_t t) const {
        return scenarios[scenario].rep_days[t / 48].vre_availability[t % 48];
    }
    double strip_demand(std::size_t scenario, std::size_t strip, std::size_t t) const {
        return scenarios[scenario].rep_days[t / 48].strip_demand[strip][t % 48];
    }
    double system_demand(std::size_t scenario, std::size_t t) const {
        double s = 0.0;
        for (std::size_t d = 0; d < n_strips; ++d) s += strip_demand(scenario, d, t);
        return s;
    }
};

// Assembled model handed to the engines.
struct Market {
    std::vector<GeneratorTech> techs;
    std::vector<GeneratorUnit> units;
    std::vector<DemandStrip> strips;
    ScenarioSet scenarios;
    IolrConfig iolr;
    MarketConfig config;

    const GeneratorTech& tech_of(const GeneratorUnit& u) const { return techs[static_cast<std::size_t>(u.tech_index)]; }
    double max_variable_cost() const;
    double max_compensation_value() const;
    // Ceiling for any lower-level dual/price: price cap in capped mode,
    // highest compensation value in paper-literal mode.
    double shed_ceiling() const;
};

// Checks every structural invariant and returns the full list of
// violations. Pure; never throws on bad data.
ValidationReport validate_model(const Market& market);

} // namespace eimlab
