#include "eimlab/dispatch.hpp"

#include "eimlab/solver/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace eimlab {

using solver::ModelHandle;
using solver::ObjSense;
using solver::RowSense;
using solver::Term;
using solver::VarKind;

DispatchOutcome clear_scenario(const Market& market, std::size_t scenario, ShedCostMode mode) {
    const std::size_t T = market.scenarios.n_intervals(scenario);
    const std::size_t G = market.units.size();
    const std::size_t D = market.strips.size();

    DispatchOutcome out;
    out.scenario = scenario;
    out.mode = mode;
    out.n_intervals = T;
    out.price.assign(T, 0.0);
    out.settled_price.assign(T, 0.0);
    out.total_shed.assign(T, 0.0);
    out.dispatch.assign(G, std::vector<double>(T, 0.0));
    out.gen_limit.assign(G, std::vector<double>(T, 0.0));
    out.gen_cost.resize(G);
    for (std::size_t g = 0; g < G; ++g) out.gen_cost[g] = market.tech_of(market.units[g]).variable_cost;
    out.mu_up_gen.assign(G, std::vector<double>(T, 0.0));
    out.mu_lo_gen.assign(G, std::vector<double>(T, 0.0));
    out.strip_demand.assign(D, std::vector<double>(T, 0.0));
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t t = 0; t < T; ++t)
            out.strip_demand[d][t] = market.scenarios.strip_demand(scenario, d, t);

    const std::size_t S = mode == ShedCostMode::paper_literal ? D : 1;
    out.shed_lp.assign(S, std::vector<double>(T, 0.0));
    out.mu_up_shed.assign(S, std::vector<double>(T, 0.0));
    out.mu_lo_shed.assign(S, std::vector<double>(T, 0.0));
    out.shed_cost.resize(S);
    if (mode == ShedCostMode::paper_literal)
        for (std::size_t d = 0; d < D; ++d) out.shed_cost[d] = market.strips[d].compensation_value;
    else
        out.shed_cost[0] = market.config.price_cap;
    out.shed_ub.assign(T, 0.0);

    ModelHandle lp;
    // Variable layout: p[g][t] then shed[s][t].
    auto pvar = [&](std::size_t g, std::size_t t) { return static_cast<int>(g * T + t); };
    auto svar = [&](std::size_t s, std::size_t t) { return static_cast<int>(G * T + s * T + t); };
    for (std::size_t g = 0; g < G; ++g) {
        const auto& u = market.units[g];
        const double cv = market.tech_of(u).variable_cost;
        for (std::size_t t = 0; t < T; ++t) {
            const double lim = u.capacity * u.availability_at(scenario, t);
            out.gen_limit[g][t] = lim;
            lp.add_var("p_" + std::to_string(g) + "_" + std::to_string(t), 0.0, lim,
                       VarKind::continuous, cv);
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t t = 0; t < T; ++t) {
            double ub = 0.0;
            if (mode == ShedCostMode::paper_literal) ub = out.strip_demand[s][t];
            else {
                for (std::size_t d = 0; d < D; ++d) ub += out.strip_demand[d][t];
                out.shed_ub[t] = ub;
            }
            lp.add_var("sh_" + std::to_string(s) + "_" + std::to_string(t), 0.0, ub,
                       VarKind::continuous, out.shed_cost[s]);
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<Term> terms;
        terms.reserve(G + S);
        double demand = 0.0;
        for (std::size_t g = 0; g < G; ++g) terms.push_back({pvar(g, t), 1.0});
        for (std::size_t s = 0; s < S; ++s) terms.push_back({svar(s, t), 1.0});
        for (std::size_t d = 0; d < D; ++d) demand += out.strip_demand[d][t];
        lp.add_row("bal_" + std::to_string(t), RowSense::eq, demand,
                   std::span<const Term>(terms.data(), terms.size()));
    }

    const solver::Solution sol = solver::solve(lp);
    if (sol.status != solver::Status::optimal)
        throw std::runtime_error("clear_scenario: dispatch LP returned " +
                                 std::string(solver::to_string(sol.status)) +
                                 " (shedding keeps the LP feasible; this is an internal error)");

    const double cap = market.config.price_cap;
    for (std::size_t t = 0; t < T; ++t) {
        out.price[t] = sol.duals[t];
        out.settled_price[t] = std::min(out.price[t], cap);
    }
    // Bound multipliers from reduced costs: min problem, at lower bound
    // mu_lo = rc >= 0, at upper bound mu_up = -rc >= 0.
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t t = 0; t < T; ++t) {
            out.dispatch[g][t] = sol.primal[static_cast<std::size_t>(pvar(g, t))];
            const double rc = sol.reduced_costs[static_cast<std::size_t>(pvar(g, t))];
            out.mu_lo_gen[g][t] = std::max(0.0, rc);
            out.mu_up_gen[g][t] = std::max(0.0, -rc);
        }
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t t = 0; t < T; ++t) {
            const double v = sol.primal[static_cast<std::size_t>(svar(s, t))];
            out.shed_lp[s][t] = v;
            out.total_shed[t] += v;
            const double rc = sol.reduced_costs[static_cast<std::size_t>(svar(s, t))];
            out.mu_lo_shed[s][t] = std::max(0.0, rc);
            out.mu_up_shed[s][t] = std::max(0.0, -rc);
        }
    return out;
}

double verify_strong_duality(const DispatchOutcome& o) {
    if (o.price.empty()) throw std::logic_error("verify_strong_duality: outcome has no duals");
    const std::size_t T = o.n_intervals;
    double primal = 0.0, dual = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double demand = 0.0;
        for (const auto& sd : o.strip_demand) demand += sd[t];
        for (std::size_t g = 0; g < o.dispatch.size(); ++g) {
            primal += o.gen_cost[g] * o.dispatch[g][t];
            dual -= o.gen_limit[g][t] * o.mu_up_gen[g][t];
        }
        for (std::size_t s = 0; s < o.shed_lp.size(); ++s) {
            primal += o.shed_cost[s] * o.shed_lp[s][t];
            const double ub = o.mode == ShedCostMode::paper_literal ? o.strip_demand[s][t] : o.shed_ub[t];
            dual -= ub * o.mu_up_shed[s][t];
        }
        dual += o.price[t] * demand;
    }
    return std::abs(primal - dual) / std::max(1.0, std::abs(primal));
}

Lemma1Report verify_lemma1(const DispatchOutcome& o) {
    if (o.price.empty()) throw std::logic_error("verify_lemma1: outcome has no duals");
    Lemma1Report rep;
    for (std::size_t g = 0; g < o.dispatch.size(); ++g) {
        const double cvc = o.gen_cost[g];
        for (std::size_t t = 0; t < o.n_intervals; ++t) {
            const double p = o.dispatch[g][t];
            const double lim = o.gen_limit[g][t];
            const double res = o.price[t] * p - cvc * p - lim * o.mu_up_gen[g][t];
            rep.max_residual = std::max(rep.max_residual, std::abs(res));
            rep.max_slackness = std::max(rep.max_slackness, std::abs((p - lim) * o.mu_up_gen[g][t]));
            rep.max_slackness = std::max(rep.max_slackness, std::abs(o.mu_lo_gen[g][t] * p));
        }
    }
    return rep;
}

ShedAllocation allocate_shed(const DispatchOutcome& o, const Market& market, AllocationMode mode,
                             std::uint64_t seed) {
    const std::size_t D = market.strips.size();
    const std::size_t T = o.n_intervals;
    ShedAllocation alloc;
    alloc.shed.assign(D, std::vector<double>(T, 0.0));

    // Strips in curtailment order: ascending compensation value, id ties.
    std::vector<std::size_t> order(D);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return market.strips[a].compensation_value < market.strips[b].compensation_value;
    });

    for (std::size_t t = 0; t < T; ++t) {
        double total = o.total_shed[t];
        if (total <= 1e-12) continue;
        switch (mode) {
            case AllocationMode::priority: {
                for (std::size_t d : order) {
                    const double take = std::min(total, o.strip_demand[d][t]);
                    alloc.shed[d][t] = take;
                    total -= take;
                    if (total <= 1e-12) break;
                }
                break;
            }
            case AllocationMode::pro_rata: {
                double demand = 0.0;
                for (std::size_t d = 0; d < D; ++d) demand += o.strip_demand[d][t];
                if (demand <= 0.0) break;
                for (std::size_t d = 0; d < D; ++d)
                    alloc.shed[d][t] = total * o.strip_demand[d][t] / demand;
                break;
            }
            case AllocationMode::seeded_random: {
                // Rolling-blackout emulation: a reproducible random strip
                // order per interval, cascade-filled.
                std::seed_seq sq{seed, static_cast<std::uint64_t>(o.scenario),
                                 static_cast<std::uint64_t>(t)};
                std::mt19937_64 rng(sq);
                std::vector<std::size_t> perm(D);
                std::iota(perm.begin(), perm.end(), 0);
                std::shuffle(perm.begin(), perm.end(), rng);
                for (std::size_t d : perm) {
                    const double take = std::min(total, o.strip_demand[d][t]);
                    alloc.shed[d][t] = take;
                    total -= take;
                    if (total <= 1e-12) break;
                }
                break;
            }
        }
    }
    alloc.random_mode = market.config.eom_allocation;
    return alloc;
}

Settlement settle(const Market& market, const std::vector<DispatchOutcome>& outcomes) {
    Settlement s;
    s.generator_margin.assign(market.units.size(), 0.0);
    s.served_energy.assign(market.scenarios.n_scenarios(), 0.0);
    s.shed_energy.assign(market.scenarios.n_scenarios(), 0.0);
    for (const auto& o : outcomes) {
        const std::size_t w = o.scenario;
        const double pi = market.scenarios.scenarios[w].probability;
        for (std::size_t t = 0; t < o.n_intervals; ++t) {
            const double wt = market.scenarios.interval_weight(w, t);
            double demand = 0.0;
            for (const auto& sd : o.strip_demand) demand += sd[t];
            const double served = demand - o.total_shed[t];
            s.consumer_energy_cost += pi * wt * o.settled_price[t] * served;
            s.served_energy[w] += wt * served;
            s.shed_energy[w] += wt * o.total_shed[t];
            for (std::size_t g = 0; g < market.units.size(); ++g) {
                const double cvc = market.tech_of(market.units[g]).variable_cost;
                s.generator_margin[g] += pi * wt * (o.settled_price[t] - cvc) * o.dispatch[g][t];
            }
        }
    }
    return s;
}

} // namespace eimlab
