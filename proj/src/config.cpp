#include "eimlab/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

namespace eimlab {

namespace {

using nlohmann::json;

MarketDesign parse_design(const std::string& s) {
    if (s == "eom" || s == "EOM") return MarketDesign::EOM;
    if (s == "eim" || s == "EIM") return MarketDesign::EIM;
    throw ConfigError("config: unknown design '" + s + "' (expected eom or eim)");
}

ShedCostMode parse_shed_mode(const std::string& s) {
    if (s == "capped_settlement") return ShedCostMode::capped_settlement;
    if (s == "paper_literal") return ShedCostMode::paper_literal;
    throw ConfigError("config: unknown shed_cost_mode '" + s + "'");
}

EomAllocation parse_alloc(const std::string& s) {
    if (s == "pro_rata") return EomAllocation::pro_rata;
    if (s == "seeded_random") return EomAllocation::seeded_random;
    throw ConfigError("config: unknown eom_allocation '" + s + "'");
}

GammaLink parse_link(const std::string& s) {
    if (s == "paper_literal_link") return GammaLink::paper_literal_link;
    if (s == "cascade_link") return GammaLink::cascade_link;
    throw ConfigError("config: unknown gamma_link '" + s + "'");
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config: JSON parse failure in " + path + ": " + e.what());
    }

    RunConfig rc;
    rc.source_path = path;
    rc.schema_version = j.value("schema_version", 1);
    if (rc.schema_version != 1)
        throw ConfigError("config: unsupported schema_version " + std::to_string(rc.schema_version));

    Market& m = rc.market;
    MarketConfig& c = m.config;
    c.design = parse_design(j.value("design", "eim"));
    c.price_cap = j.value("price_cap", 2000.0);
    c.rps = j.value("rps", 0.0);
    c.shed_cost_mode = parse_shed_mode(j.value("shed_cost_mode", "capped_settlement"));
    c.eom_allocation = parse_alloc(j.value("eom_allocation", "pro_rata"));
    c.optimality_gap = j.value("optimality_gap", 1e-3);
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        c.eps_i = t.value("eps_i", 0.0);
        c.eps_j = t.value("eps_j", 25.0);
        c.eps_k = t.value("eps_k", 25.0);
    }
    if (j.contains("iterations")) {
        c.max_outer_iters = j["iterations"].value("max_outer", 10);
        c.max_inner_iters = j["iterations"].value("max_inner", 25);
    }
    c.seed = j.value("seed", 0ull);
    if (j.contains("gmp")) c.aggregate_dual_products = j["gmp"].value("aggregate_dual_products", false);

    if (j.contains("iolr")) {
        const auto& io = j["iolr"];
        m.iolr.technical_reserves = io.value("technical_reserves", 0.0);
        m.iolr.cvar_confidence = io.value("cvar_confidence", 0.995);
        m.iolr.risk_weight = io.value("risk_weight", 0.5);
    }

    if (!j.contains("techs") || j["techs"].empty()) throw ConfigError("config: techs[] required");
    for (const auto& jt : j["techs"]) {
        GeneratorTech t;
        t.name = jt.at("name").get<std::string>();
        t.variable_cost = jt.at("variable_cost").get<double>();
        t.fixed_cost = jt.at("fixed_cost").get<double>();
        t.investment_cost = jt.at("investment_cost").get<double>();
        t.asset_life = jt.value("asset_life", 20.0);
        t.equity_rate = jt.value("equity_rate", 0.10);
        t.debt_rate = jt.value("debt_rate", 0.05);
        t.gearing = jt.value("gearing", 0.6);
        t.risk_weight = jt.value("risk_weight", 0.5);
        t.cvar_confidence = jt.value("cvar_confidence", 0.95);
        t.capacity_step = jt.value("capacity_step", 25.0);
        t.expansion_bits = jt.value("expansion_bits", 4);
        t.finalize();
        m.techs.push_back(std::move(t));
    }
    auto tech_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < m.techs.size(); ++i)
            if (m.techs[i].name == name) return static_cast<int>(i);
        throw ConfigError("config: unknown tech '" + name + "'");
    };

    // Demand strips.
    std::vector<StripSpec> strip_specs;
    if (!j.contains("strips") || j["strips"].empty()) throw ConfigError("config: strips[] required");
    for (const auto& js : j["strips"]) {
        StripSpec s;
        s.id = js.at("id").get<std::string>();
        s.share = js.value("share", 1.0 / static_cast<double>(j["strips"].size()));
        s.compensation_value = js.at("compensation_value").get<double>();
        s.premium_rate = js.value("premium_rate", 0.0);
        strip_specs.push_back(std::move(s));
    }

    // Scenario data: either raw traces (clustered here) or a prebuilt set.
    const auto dir = std::filesystem::path(path).parent_path();
    ScenarioBuild build;
    if (j.contains("scenario_set")) {
        build = load_scenario_set((dir / j["scenario_set"].at("path").get<std::string>()).string());
        if (build.strips.size() != strip_specs.size())
            throw ConfigError("config: scenario_set strip count differs from strips[]");
        for (std::size_t d = 0; d < strip_specs.size(); ++d) {
            build.strips[d].id = strip_specs[d].id;
            build.strips[d].compensation_value = strip_specs[d].compensation_value;
            build.strips[d].premium_rate = strip_specs[d].premium_rate;
        }
    } else if (j.contains("traces")) {
        const auto& jt = j["traces"];
        BuildOptions opt;
        opt.rep_days = jt.value("rep_days", 12u);
        opt.medoid = jt.value("medoid", false);
        opt.energy_tolerance = jt.value("energy_tolerance", 0.02);
        const auto traces = load_traces((dir / jt.at("path").get<std::string>()).string());
        build = build_scenario_set(traces, strip_specs, c.rps, opt);
    } else {
        throw ConfigError("config: either traces{} or scenario_set{} required");
    }
    m.scenarios = build.set;
    m.strips = build.strips;
    rc.diagnostics = build.diagnostics;

    // Units: independent generators, plus the sized VRE as a fixed unit.
    if (j.contains("units"))
        for (const auto& ju : j["units"]) {
            const int count = ju.value("count", 1);
            const std::string base_id = ju.at("id").get<std::string>();
            const int ti = tech_index(ju.at("tech").get<std::string>());
            for (int i = 0; i < count; ++i) {
                GeneratorUnit u;
                u.id = count == 1 ? base_id : base_id + "_" + std::to_string(i + 1);
                u.tech_index = ti;
                u.kind = UnitKind::independent;
                u.capacity = ju.value("capacity", 0.0);
                m.units.push_back(std::move(u));
            }
        }
    if (m.scenarios.vre_capacity > 0.0) {
        GeneratorTech vre_tech;
        vre_tech.name = "vre";
        vre_tech.variable_cost = 0.0;
        vre_tech.fixed_cost = 0.0;
        vre_tech.investment_cost = 0.0;
        vre_tech.capacity_step = 1e-6; // sized capacity is not step-constrained
        vre_tech.expansion_bits = 1;
        vre_tech.finalize();
        m.techs.push_back(vre_tech);
        GeneratorUnit u;
        u.id = "vre";
        u.tech_index = static_cast<int>(m.techs.size()) - 1;
        u.kind = UnitKind::fixed_vre;
        u.capacity = m.scenarios.vre_capacity;
        u.availability.resize(m.scenarios.n_scenarios());
        for (std::size_t w = 0; w < m.scenarios.n_scenarios(); ++w) {
            u.availability[w].resize(m.scenarios.n_intervals(w));
            for (std::size_t t = 0; t < m.scenarios.n_intervals(w); ++t)
                u.availability[w][t] = m.scenarios.vre_availability(w, t);
        }
        m.units.push_back(std::move(u));
    }

    // Equilibrium options.
    EquilibriumOptions& eo = rc.equilibrium;
    if (j.contains("equilibrium")) {
        const auto& je = j["equilibrium"];
        eo.link = parse_link(je.value("gamma_link", "paper_literal_link"));
        eo.accumulate_contracts = je.value("accumulate_contracts", false);
        if (je.contains("starts"))
            for (const auto& s : je["starts"]) rc.start_specs.push_back(s.get<std::string>());
        if (je.contains("scripted"))
            for (const auto& js : je["scripted"]) {
                ScriptedAgent sa;
                const std::string uid = js.at("unit").get<std::string>();
                bool found = false;
                for (std::size_t g = 0; g < m.units.size(); ++g)
                    if (m.units[g].id == uid) {
                        sa.unit = g;
                        found = true;
                    }
                if (!found) throw ConfigError("config: scripted unit '" + uid + "' not found");
                sa.cycle = js.at("cycle").get<std::vector<double>>();
                eo.scripted.push_back(std::move(sa));
            }
    }
    if (rc.start_specs.empty()) rc.start_specs = {"zero", "max", "random", "random"};

    // Insurer candidates default to every tech except the VRE placeholder.
    // Entries are either a tech name or {"tech": name, "bits": n} when the
    // insurer may contract more steps than independents build.
    if (j.contains("iolr") && j["iolr"].contains("candidates")) {
        for (const auto& cn : j["iolr"]["candidates"]) {
            InsCandidate cand;
            if (cn.is_string()) {
                cand.tech_index = tech_index(cn.get<std::string>());
                cand.expansion_bits = m.techs[static_cast<std::size_t>(cand.tech_index)].expansion_bits;
            } else {
                cand.tech_index = tech_index(cn.at("tech").get<std::string>());
                cand.expansion_bits =
                    cn.value("bits", m.techs[static_cast<std::size_t>(cand.tech_index)].expansion_bits);
            }
            rc.equilibrium.candidates.push_back(cand);
        }
    } else if (c.design == MarketDesign::EIM) {
        for (std::size_t ti = 0; ti < m.techs.size(); ++ti) {
            if (m.techs[ti].name == "vre") continue;
            InsCandidate cand;
            cand.tech_index = static_cast<int>(ti);
            cand.expansion_bits = m.techs[ti].expansion_bits;
            rc.equilibrium.candidates.push_back(cand);
        }
    }

    rc.price_bands = j.value("price_bands", std::vector<double>{0, 25, 50, 100, 200, 500, 1000});
    rc.raw_json = j.dump(1);
    return rc;
}

std::vector<std::vector<double>> expand_starts(const RunConfig& rc) {
    const Market& m = rc.market;
    std::vector<std::size_t> indep;
    for (std::size_t g = 0; g < m.units.size(); ++g)
        if (m.units[g].kind == UnitKind::independent) indep.push_back(g);

    std::vector<std::vector<double>> starts;
    std::mt19937_64 rng(m.config.seed ^ 0x5eedf00dull);
    for (const std::string& spec : rc.start_specs) {
        std::vector<double> v(indep.size(), 0.0);
        if (spec == "zero") {
            // all zeros
        } else if (spec == "max") {
            for (std::size_t i = 0; i < indep.size(); ++i)
                v[i] = m.tech_of(m.units[indep[i]]).max_capacity();
        } else if (spec == "random") {
            for (std::size_t i = 0; i < indep.size(); ++i) {
                const GeneratorTech& t = m.tech_of(m.units[indep[i]]);
                const int levels = static_cast<int>(std::exp2(t.expansion_bits));
                v[i] = t.capacity_step * static_cast<double>(rng() % static_cast<std::uint64_t>(levels));
            }
        } else {
            throw ConfigError("config: unknown start spec '" + spec + "'");
        }
        starts.push_back(std::move(v));
    }
    return starts;
}

} // namespace eimlab
