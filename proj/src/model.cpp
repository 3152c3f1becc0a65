#include "eimlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace eimlab {

double annuity_factor(double rate, double life) {
    if (!std::isfinite(rate) || !std::isfinite(life))
        throw std::invalid_argument("annuity_factor: non-finite input");
    if (rate < 0.0 || life < 1.0)
        throw std::invalid_argument("annuity_factor: rate must be >= 0 and life >= 1");
    if (rate == 0.0) return 1.0 / life;
    return rate / (1.0 - std::pow(1.0 + rate, -life));
}

double wacc(const GeneratorTech& tech) { return tech.wacc(); }

double GeneratorTech::max_capacity() const {
    return capacity_step * (std::pow(2.0, expansion_bits) - 1.0);
}

double Market::max_variable_cost() const {
    double m = 0.0;
    for (const auto& t : techs) m = std::max(m, t.variable_cost);
    return m;
}

double Market::max_compensation_value() const {
    double m = 0.0;
    for (const auto& d : strips) m = std::max(m, d.compensation_value);
    return m;
}

double Market::shed_ceiling() const {
    return config.shed_cost_mode == ShedCostMode::capped_settlement ? config.price_cap
                                                                    : max_compensation_value();
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.where << ": " << v.what << "\n";
    return os.str();
}

namespace {

void check_tech(const GeneratorTech& t, std::size_t i, ValidationReport& rep) {
    const std::string where = "tech[" + std::to_string(i) + "] " + t.name;
    auto add = [&](const std::string& m) { rep.violations.push_back({where, m}); };
    if (t.gearing < 0.0 || t.gearing > 1.0) add("gearing must lie in [0,1]");
    if (t.risk_weight < 0.0 || t.risk_weight > 1.0) add("risk_weight must lie in [0,1]");
    if (t.cvar_confidence <= 0.0 || t.cvar_confidence >= 1.0) add("cvar_confidence must lie in (0,1)");
    if (t.capacity_step <= 0.0) add("capacity_step must be positive");
    if (t.expansion_bits < 1) add("expansion_bits must be >= 1");
    if (t.variable_cost < 0.0 || t.fixed_cost < 0.0 || t.investment_cost < 0.0) add("costs must be non-negative");
    if (t.asset_life < 1.0) add("asset_life must be >= 1 year");
    if (t.equity_rate < 0.0 || t.debt_rate < 0.0) add("financing rates must be non-negative");
    const double expect = annuity_factor(t.wacc(), t.asset_life);
    if (std::abs(t.annuity - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
        add("annuity_factor inconsistent with wacc and asset_life; call finalize()");
}

void check_unit(const Market& m, const GeneratorUnit& u, std::size_t i, ValidationReport& rep) {
    const std::string where = "unit[" + std::to_string(i) + "] " + u.id;
    auto add = [&](const std::string& msg) { rep.violations.push_back({where, msg}); };
    if (u.tech_index < 0 || static_cast<std::size_t>(u.tech_index) >= m.techs.size()) {
        add("tech_index out of range");
        return;
    }
    if (u.capacity < 0.0) add("capacity must be non-negative");
    if (u.kind != UnitKind::fixed_vre) {
        const double step = m.techs[static_cast<std::size_t>(u.tech_index)].capacity_step;
        const double q = u.capacity / step;
        if (std::abs(q - std::round(q)) > 1e-6) add("capacity is not an integer multiple of the tech capacity_step");
    }
    if (!u.has_profile()) return;
    if (u.availability.size() != m.scenarios.n_scenarios()) {
        add("availability scenario count does not match scenario set");
        return;
    }
    for (std::size_t w = 0; w < u.availability.size(); ++w) {
        if (u.availability[w].size() != m.scenarios.n_intervals(w)) {
            add("availability interval count mismatch in scenario " + std::to_string(w));
            continue;
        }
        for (std::size_t t = 0; t < u.availability[w].size(); ++t) {
            const double a = u.availability[w][t];
            if (!(a >= 0.0 && a <= 1.0)) {
                add("availability out of [0,1] at (t=" + std::to_string(t) + ", omega=" + std::to_string(w) + ")");
                break;
            }
        }
    }
}

void check_strip(const Market& m, const DemandStrip& d, std::size_t i, ValidationReport& rep) {
    const std::string where = "strip[" + std::to_string(i) + "] " + d.id;
    auto add = [&](const std::string& msg) { rep.violations.push_back({where, msg}); };
    if (d.compensation_value <= 0.0) add("compensation_value must be positive");
    if (d.premium_rate < 0.0) add("premium_rate must be non-negative");
    double maxd = 0.0;
    for (std::size_t w = 0; w < m.scenarios.n_scenarios(); ++w) {
        for (std::size_t t = 0; t < m.scenarios.n_intervals(w); ++t) {
            const double v = m.scenarios.strip_demand(w, i, t);
            if (v < 0.0) {
                add("negative demand at (t=" + std::to_string(t) + ", omega=" + std::to_string(w) + ")");
                return;
            }
            maxd = std::max(maxd, v);
        }
    }
    // Billing peak comes from the raw traces, so it may only exceed the
    // representative-day maximum, never undershoot it.
    if (d.peak_demand + 1e-9 < maxd) add("peak_demand below maximum representative-day demand");
}

} // namespace

ValidationReport validate_model(const Market& m) {
    ValidationReport rep;
    for (std::size_t i = 0; i < m.techs.size(); ++i) check_tech(m.techs[i], i, rep);
    for (std::size_t i = 0; i < m.units.size(); ++i) check_unit(m, m.units[i], i, rep);

    double psum = 0.0;
    for (const auto& s : m.scenarios.scenarios) {
        psum += s.probability;
        if (s.probability < 0.0)
            rep.violations.push_back({"scenario " + s.id, "negative probability"});
        for (std::size_t k = 0; k < s.rep_days.size(); ++k) {
            const auto& rd = s.rep_days[k];
            if (rd.vre_availability.size() != 48)
                rep.violations.push_back({"scenario " + s.id, "rep day " + std::to_string(k) + " does not have 48 intervals"});
            if (rd.strip_demand.size() != m.strips.size())
                rep.violations.push_back({"scenario " + s.id, "rep day " + std::to_string(k) + " strip count mismatch"});
            for (const auto& sd : rd.strip_demand)
                if (sd.size() != 48)
                    rep.violations.push_back({"scenario " + s.id, "rep day " + std::to_string(k) + " strip series is not 48 intervals"});
            if (rd.weight <= 0.0)
                rep.violations.push_back({"scenario " + s.id, "rep day " + std::to_string(k) + " has non-positive weight"});
        }
    }
    if (!m.scenarios.scenarios.empty() && std::abs(psum - 1.0) > 1e-12)
        rep.violations.push_back({"scenario set", "scenario probabilities must sum to 1"});
    if (m.scenarios.n_strips != m.strips.size())
        rep.violations.push_back({"scenario set", "strip count differs from strip definitions"});

    for (std::size_t i = 0; i < m.strips.size(); ++i) check_strip(m, m.strips[i], i, rep);

    const auto& c = m.config;
    if (!m.techs.empty() && c.price_cap <= m.max_variable_cost())
        rep.violations.push_back({"market config", "price_cap must exceed every generator variable cost"});
    if (c.rps < 0.0 || c.rps > 1.0) rep.violations.push_back({"market config", "rps must lie in [0,1]"});
    if (c.optimality_gap <= 0.0) rep.violations.push_back({"market config", "optimality_gap must be positive"});
    if (c.eps_i < 0.0 || c.eps_j <= 0.0 || c.eps_k <= 0.0)
        rep.violations.push_back({"market config", "tolerances must be positive (eps_i may be zero for binary exactness)"});
    if (c.max_outer_iters < 1 || c.max_inner_iters < 1)
        rep.violations.push_back({"market config", "iteration limits must be >= 1"});

    const auto& io = m.iolr;
    if (io.technical_reserves < 0.0) rep.violations.push_back({"iolr config", "technical_reserves must be non-negative"});
    if (io.cvar_confidence <= 0.0 || io.cvar_confidence >= 1.0)
        rep.violations.push_back({"iolr config", "cvar_confidence must lie in (0,1)"});
    if (io.risk_weight < 0.0 || io.risk_weight > 1.0)
        rep.violations.push_back({"iolr config", "risk_weight must lie in [0,1]"});

    return rep;
}

} // namespace eimlab
