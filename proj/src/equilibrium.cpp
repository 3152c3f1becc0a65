#include "eimlab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace eimlab {

const char* to_string(EqStatus s) {
    switch (s) {
        case EqStatus::converged: return "converged";
        case EqStatus::oscillating: return "oscillating";
        case EqStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

std::vector<std::size_t> independent_indices(const Market& m) {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < m.units.size(); ++g)
        if (m.units[g].kind == UnitKind::independent) out.push_back(g);
    return out;
}

std::vector<double> all_capacities(const Market& m) {
    std::vector<double> caps(m.units.size());
    for (std::size_t g = 0; g < m.units.size(); ++g) caps[g] = m.units[g].capacity;
    return caps;
}

// Ex-ante curtailment per scenario/strip/interval on the given market,
// priority-allocated (the operational curtailment scheme).
std::vector<std::vector<std::vector<double>>> ex_ante_shed(const Market& m) {
    std::vector<std::vector<std::vector<double>>> shed(m.scenarios.n_scenarios());
    for (std::size_t w = 0; w < m.scenarios.n_scenarios(); ++w) {
        const DispatchOutcome o = clear_scenario(m, w, m.config.shed_cost_mode);
        const ShedAllocation alloc = allocate_shed(o, m, AllocationMode::priority, m.config.seed);
        shed[w] = alloc.shed;
    }
    return shed;
}

void write_trace_line(std::ofstream& f, const SweepRecord& rec) {
    if (!f.is_open()) return;
    nlohmann::json j;
    j["outer"] = rec.outer;
    j["inner"] = rec.inner;
    j["capacity"] = rec.capacity;
    j["utility"] = rec.utility;
    f << j.dump() << "\n";
}

} // namespace

OscillationReport detect_oscillation(const std::vector<SweepRecord>& trace) {
    OscillationReport rep;
    const std::size_t n = trace.size();
    if (n < 2) return rep;

    // Exact state revisit: earliest i < j with identical capacity vectors.
    for (std::size_t i = 0; i + 1 < n && !rep.cycling; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (trace[i].capacity == trace[j].capacity) {
                rep.cycling = true;
                rep.period = static_cast<int>(j - i);
                rep.window_start = static_cast<int>(i);
                break;
            }
    if (!rep.cycling) rep.window_start = static_cast<int>(n / 2);

    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = static_cast<std::size_t>(rep.window_start); s < n; ++s) {
        const double total = std::accumulate(trace[s].capacity.begin(), trace[s].capacity.end(), 0.0);
        lo = std::min(lo, total);
        hi = std::max(hi, total);
        sum += total;
        ++count;
    }
    rep.band_low = lo;
    rep.band_high = hi;
    rep.average = count ? sum / static_cast<double>(count) : 0.0;
    // A fixed point revisits with period 1 and zero band; that is not a cycle.
    if (rep.cycling && rep.period == 1 && hi - lo < 1e-9) rep.cycling = false;
    return rep;
}

EquilibriumState run_equilibrium(const Market& base, const EquilibriumOptions& opts) {
    EquilibriumState st;
    st.market = base;
    Market& mkt = st.market;
    const MarketConfig& cfg = base.config;
    const bool eom = cfg.design == MarketDesign::EOM;

    st.independent_units = independent_indices(mkt);
    const std::size_t NI = st.independent_units.size();
    if (!opts.start.empty() && opts.start.size() != NI)
        throw std::invalid_argument("run_equilibrium: start vector size mismatch");
    for (std::size_t i = 0; i < NI; ++i)
        mkt.units[st.independent_units[i]].capacity = opts.start.empty() ? 0.0 : opts.start[i];

    // Contracted fleet management: contracted units live at the tail of the
    // unit list and are replaced wholesale each outer iteration.
    const std::size_t base_units = mkt.units.size();
    std::vector<int> prev_q(mkt.strips.size(), 0);
    std::vector<double> prev_pn(opts.candidates.size(), 0.0);

    std::ofstream trace_file;
    if (!opts.trace_path.empty()) trace_file.open(opts.trace_path);

    std::vector<std::size_t> scripted_count(NI, 0);
    auto scripted_for = [&](std::size_t unit) -> const ScriptedAgent* {
        for (const auto& s : opts.scripted)
            if (s.unit == unit) return &s;
        return nullptr;
    };

    // Best responses repeat near fixed points (the closing sweep re-solves
    // every agent at an unchanged state); the solver is deterministic, so a
    // state-keyed cache is exact.
    std::map<std::string, std::pair<double, double>> br_cache;
    auto state_key = [&](std::size_t unit) {
        std::string key = std::to_string(unit);
        for (const auto& u : mkt.units) {
            key += '|';
            key += std::to_string(u.tech_index);
            key += ':';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", u.capacity);
            key += buf;
        }
        return key;
    };

    bool inner_converged = false;
    for (int outer = 1; outer <= cfg.max_outer_iters; ++outer) {
        st.outer_count = outer;
        inner_converged = false;
        for (int inner = 1; inner <= cfg.max_inner_iters; ++inner) {
            double max_delta = 0.0;
            SweepRecord rec;
            rec.outer = outer;
            rec.inner = inner;
            for (std::size_t i = 0; i < NI; ++i) {
                const std::size_t unit = st.independent_units[i];
                const double old_cap = mkt.units[unit].capacity;
                double new_cap;
                double utility = 0.0;
                if (const ScriptedAgent* sa = scripted_for(unit); sa && !sa->cycle.empty()) {
                    new_cap = sa->cycle[scripted_count[i] % sa->cycle.size()];
                    ++scripted_count[i];
                } else if (const auto hit = br_cache.find(state_key(unit)); hit != br_cache.end()) {
                    new_cap = hit->second.first;
                    utility = hit->second.second;
                } else {
                    GmpInstance inst;
                    inst.market = &mkt;
                    inst.acting = unit;
                    inst.rival_capacity = all_capacities(mkt);
                    const GmpSolution sol = solve_gmp(inst, cfg.optimality_gap);
                    if (!sol.feasible()) {
                        std::string caps;
                        for (double c : inst.rival_capacity) caps += std::to_string(c) + " ";
                        if (std::getenv("EIMLAB_DUMP_FAIL")) {
                            GmpModel gm = build_gmp(inst);
                            solver::write_mps(gm.model, "/tmp/eimlab_failed_gmp.mps");
                        }
                        throw std::runtime_error(
                            "run_equilibrium: GMP solve for unit " + mkt.units[unit].id +
                            " returned " + std::string(solver::to_string(sol.status)) + " at outer " +
                            std::to_string(outer) + " inner " + std::to_string(inner) + " after " +
                            std::to_string(sol.iterations) + " iterations, " +
                            std::to_string(sol.nodes) + " nodes (rival capacities: " + caps + ")");
                    }
                    new_cap = sol.capacity;
                    utility = sol.utility;
                    br_cache.emplace(state_key(unit), std::make_pair(new_cap, utility));
                }
                mkt.units[unit].capacity = new_cap;
                max_delta = std::max(max_delta, std::abs(new_cap - old_cap));
                rec.capacity.push_back(new_cap);
                rec.utility.push_back(utility);
            }
            st.trace.push_back(rec);
            write_trace_line(trace_file, rec);
            ++st.total_sweeps;
            if (max_delta <= cfg.eps_k) {
                inner_converged = true;
                break;
            }
        }
        if (!inner_converged) {
            st.oscillation = detect_oscillation(st.trace);
            st.status = st.oscillation.cycling ? EqStatus::oscillating : EqStatus::iteration_limit;
            st.independent_capacity.clear();
            for (std::size_t u : st.independent_units)
                st.independent_capacity.push_back(mkt.units[u].capacity);
            return st;
        }

        // Insurance stage. The shed basis excludes the contracted fleet
        // unless contracts accumulate (the gamma link nets contracted MW).
        Market shed_basis = mkt;
        if (!opts.accumulate_contracts)
            shed_basis.units.resize(base_units);
        InsInput input;
        input.market = &shed_basis;
        input.ex_ante_shed = ex_ante_shed(shed_basis);
        input.candidates = opts.candidates;
        const IolrDecision dec = solve_ins(input, opts.link, eom, cfg.optimality_gap);
        if (dec.status != solver::Status::optimal && dec.status != solver::Status::gap_reached)
            throw std::runtime_error("run_equilibrium: INS solve returned " +
                                     std::string(solver::to_string(dec.status)));
        st.last_ex_ante_shed = input.ex_ante_shed;
        st.iolr = dec;

        OuterRecord orec;
        orec.outer = outer;
        orec.contracts = dec.contracts;
        orec.contracted_capacity = dec.contracted_capacity;
        orec.iolr_utility = dec.utility;
        st.outer_trace.push_back(orec);

        double dq = 0.0, dpn = 0.0;
        for (std::size_t d = 0; d < prev_q.size(); ++d)
            dq = std::max(dq, std::abs(static_cast<double>(dec.contracts[d] - prev_q[d])));
        for (std::size_t c = 0; c < prev_pn.size(); ++c)
            dpn = std::max(dpn, std::abs(dec.contracted_capacity[c] - prev_pn[c]));
        prev_q = dec.contracts;
        prev_pn = dec.contracted_capacity;

        // Swap the contracted fleet into the market (replace semantics); with
        // accumulation the new units stack on top of the existing tail.
        if (!opts.accumulate_contracts) mkt.units.resize(base_units);
        for (std::size_t c = 0; c < opts.candidates.size(); ++c) {
            if (dec.contracted_capacity[c] <= 0.0) continue;
            GeneratorUnit u;
            u.id = "iolr_" + mkt.techs[static_cast<std::size_t>(opts.candidates[c].tech_index)].name +
                   "_" + std::to_string(outer) + "_" + std::to_string(c);
            u.tech_index = opts.candidates[c].tech_index;
            u.kind = UnitKind::iolr_contracted;
            u.capacity = dec.contracted_capacity[c];
            mkt.units.push_back(std::move(u));
        }

        if (dq <= cfg.eps_i && dpn <= cfg.eps_j) {
            st.status = EqStatus::converged;
            break;
        }
    }
    if (st.status != EqStatus::converged) {
        st.oscillation = detect_oscillation(st.trace);
        st.status = st.oscillation.cycling ? EqStatus::oscillating : EqStatus::iteration_limit;
    }
    st.independent_capacity.clear();
    for (std::size_t u : st.independent_units) st.independent_capacity.push_back(mkt.units[u].capacity);
    return st;
}

namespace {

// Utility of an independent unit at its current capacity, evaluated through
// the dispatch engine (independent of the MILP path).
double evaluate_utility(const Market& mkt, std::size_t unit) {
    const GeneratorTech& tech = mkt.tech_of(mkt.units[unit]);
    const std::size_t W = mkt.scenarios.n_scenarios();
    std::vector<double> profit(W, 0.0), probs(W);
    for (std::size_t w = 0; w < W; ++w) {
        probs[w] = mkt.scenarios.scenarios[w].probability;
        const DispatchOutcome o = clear_scenario(mkt, w, mkt.config.shed_cost_mode);
        double margin = 0.0;
        for (std::size_t t = 0; t < o.n_intervals; ++t)
            margin += mkt.scenarios.interval_weight(w, t) * (o.price[t] - tech.variable_cost) *
                      o.dispatch[unit][t];
        profit[w] = margin - tech.fixed_cost * mkt.units[unit].capacity;
    }
    const RiskAssessment risk = cvar(profit, probs, tech.cvar_confidence);
    return (1.0 - tech.risk_weight) * risk.mean_profit + tech.risk_weight * risk.cvar;
}

} // namespace

DeviationReport verify_equilibrium(const EquilibriumState& state, const EquilibriumOptions& opts) {
    DeviationReport rep;
    const Market& mkt = state.market;
    for (std::size_t u : state.independent_units) {
        GmpInstance inst;
        inst.market = &mkt;
        inst.acting = u;
        inst.rival_capacity = all_capacities(mkt);
        const GmpSolution br = solve_gmp(inst, mkt.config.optimality_gap);
        const double cur = evaluate_utility(mkt, u);
        const double gain = (br.utility - cur) / std::max(1.0, std::abs(cur));
        rep.generator_gain.push_back(gain);
        rep.max_relative_gain = std::max(rep.max_relative_gain, gain);
    }
    if (mkt.config.design == MarketDesign::EIM && !state.last_ex_ante_shed.empty()) {
        Market shed_basis = mkt;
        // Same basis the final INS solve saw.
        std::size_t keep = mkt.units.size();
        while (keep > 0 && mkt.units[keep - 1].kind == UnitKind::iolr_contracted) --keep;
        shed_basis.units.resize(keep);
        InsInput input;
        input.market = &shed_basis;
        input.ex_ante_shed = state.last_ex_ante_shed;
        input.candidates = opts.candidates;
        const IolrDecision br = solve_ins(input, opts.link, false, mkt.config.optimality_gap);
        const InsAudit audit = audit_ins(state.iolr, input);
        const double beta = mkt.iolr.risk_weight;
        const double cur = (1.0 - beta) * audit.expectation_slack +
                           beta * (audit.prudential_slack - mkt.iolr.technical_reserves);
        rep.iolr_gain = (br.utility - cur) / std::max(1.0, std::abs(cur));
        rep.iolr_checked = true;
        rep.max_relative_gain = std::max(rep.max_relative_gain, rep.iolr_gain);
    }
    return rep;
}

MultiStartResult run_multistart(const Market& base, const EquilibriumOptions& opts,
                                const std::vector<std::vector<double>>& starts) {
    MultiStartResult res;
    const auto indep = independent_indices(base);
    double step = 25.0;
    if (!indep.empty()) step = base.tech_of(base.units[indep[0]]).capacity_step;
    for (const auto& s : starts) {
        EquilibriumOptions o = opts;
        o.start = s;
        res.runs.push_back(run_equilibrium(base, o));
    }
    for (std::size_t i = 1; i < res.runs.size(); ++i) {
        if (res.runs[i].status != EqStatus::converged || res.runs[0].status != EqStatus::converged)
            continue;
        for (std::size_t g = 0; g < res.runs[i].independent_capacity.size(); ++g)
            if (std::abs(res.runs[i].independent_capacity[g] - res.runs[0].independent_capacity[g]) >
                step + 1e-9)
                res.agree = false;
    }
    return res;
}

} // namespace eimlab
