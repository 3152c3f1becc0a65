#include "eimlab/oracle.hpp"

#include "eimlab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eimlab::oracle {

RefDispatch reference_dispatch(std::span<const RefUnit> units, std::span<const RefStrip> strips) {
    RefDispatch r;
    r.dispatch.assign(units.size(), 0.0);
    r.shed.assign(strips.size(), 0.0);
    r.mu_up_gen.assign(units.size(), 0.0);
    r.mu_lo_gen.assign(units.size(), 0.0);
    r.mu_up_shed.assign(strips.size(), 0.0);
    r.mu_lo_shed.assign(strips.size(), 0.0);

    double demand = 0.0;
    for (const auto& s : strips) demand += s.demand;

    std::vector<std::size_t> gorder(units.size());
    std::iota(gorder.begin(), gorder.end(), 0);
    std::stable_sort(gorder.begin(), gorder.end(),
                     [&](std::size_t a, std::size_t b) { return units[a].cost < units[b].cost; });

    double residual = demand;
    double price = units.empty() ? 0.0 : units[gorder[0]].cost;
    bool interior = false;
    for (std::size_t gi : gorder) {
        if (residual <= 1e-12) break;
        const double take = std::min(units[gi].limit, residual);
        r.dispatch[gi] = take;
        residual -= take;
        price = units[gi].cost;
        interior = take < units[gi].limit - 1e-12;
    }

    if (residual > 1e-12) {
        // Deficit: shed the cheapest compensation first; the marginal strip
        // sets the price.
        std::vector<std::size_t> sorder(strips.size());
        std::iota(sorder.begin(), sorder.end(), 0);
        std::stable_sort(sorder.begin(), sorder.end(), [&](std::size_t a, std::size_t b) {
            return strips[a].shed_cost < strips[b].shed_cost;
        });
        for (std::size_t si : sorder) {
            if (residual <= 1e-12) break;
            const double take = std::min(strips[si].demand, residual);
            r.shed[si] = take;
            residual -= take;
            price = strips[si].shed_cost;
        }
    } else if (!interior && !units.empty()) {
        // Every dispatched unit sits exactly at its limit: the next merit
        // step (generator or shedding) prices the interval.
        double next = std::numeric_limits<double>::infinity();
        for (std::size_t gi : gorder)
            if (r.dispatch[gi] <= 1e-12 && units[gi].limit > 1e-12) {
                next = std::min(next, units[gi].cost);
                break;
            }
        for (const auto& s : strips)
            if (s.demand > 1e-12) next = std::min(next, s.shed_cost);
        if (std::isfinite(next)) price = next;
    }

    r.price = price;
    for (std::size_t g = 0; g < units.size(); ++g) {
        r.mu_up_gen[g] = std::max(0.0, price - units[g].cost);
        r.mu_lo_gen[g] = std::max(0.0, units[g].cost - price);
        r.cost += units[g].cost * r.dispatch[g];
    }
    for (std::size_t d = 0; d < strips.size(); ++d) {
        r.mu_up_shed[d] = std::max(0.0, price - strips[d].shed_cost);
        r.mu_lo_shed[d] = std::max(0.0, strips[d].shed_cost - price);
        r.cost += strips[d].shed_cost * r.shed[d];
    }
    return r;
}

std::vector<double> full_capacity_grid(const GeneratorTech& tech) {
    std::vector<double> grid;
    const int n = static_cast<int>(std::exp2(tech.expansion_bits));
    for (int i = 0; i < n; ++i) grid.push_back(tech.capacity_step * i);
    return grid;
}

GridSearchResult grid_search_gmp(const GmpInstance& inst, std::span<const double> grid) {
    if (grid.size() > 100000) throw std::invalid_argument("grid_search_gmp: grid too large");
    const Market& mkt = *inst.market;
    const GeneratorUnit& acting_unit = mkt.units[inst.acting];
    const GeneratorTech& tech = mkt.tech_of(acting_unit);
    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t G = mkt.units.size();
    const ShedCostMode mode = mkt.config.shed_cost_mode;

    std::vector<double> probs(W);
    for (std::size_t w = 0; w < W; ++w) probs[w] = mkt.scenarios.scenarios[w].probability;

    GridSearchResult best;
    best.capacity = 0.0;
    best.utility = -std::numeric_limits<double>::infinity();
    bool any_feasible = false;

    for (double cap : grid) {
        std::vector<double> profit(W, 0.0);
        for (std::size_t w = 0; w < W; ++w) {
            const std::size_t T = mkt.scenarios.n_intervals(w);
            double margin = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                std::vector<RefUnit> units(G);
                for (std::size_t g = 0; g < G; ++g) {
                    const double c = g == inst.acting ? cap : inst.rival_cap(g);
                    units[g] = {mkt.tech_of(mkt.units[g]).variable_cost,
                                c * mkt.units[g].availability_at(w, t)};
                }
                std::vector<RefStrip> strips;
                if (mode == ShedCostMode::paper_literal) {
                    for (std::size_t d = 0; d < mkt.strips.size(); ++d)
                        strips.push_back({mkt.scenarios.strip_demand(w, d, t),
                                          mkt.strips[d].compensation_value});
                } else {
                    strips.push_back({mkt.scenarios.system_demand(w, t), mkt.config.price_cap});
                }
                const RefDispatch rd = reference_dispatch(units, strips);
                const double wt = mkt.scenarios.interval_weight(w, t);
                margin += wt * (rd.price - tech.variable_cost) * rd.dispatch[inst.acting];
            }
            profit[w] = margin - tech.fixed_cost * cap;
        }
        const RiskAssessment risk = cvar(profit, probs, tech.cvar_confidence);
        const FinancingResult fin = financing_check(risk.mean_profit, risk.cvar, tech, cap);
        ++best.evaluations;
        if (!fin.pass()) continue;
        any_feasible = true;
        const double utility = (1.0 - tech.risk_weight) * risk.mean_profit + tech.risk_weight * risk.cvar;
        if (utility > best.utility + 1e-9 * std::max(1.0, std::abs(utility))) {
            best.utility = utility;
            best.capacity = cap;
            best.scenario_profit = profit;
        }
    }
    if (!any_feasible) {
        // "Do not build" fallback; all financing constraints vacuous at zero.
        best.capacity = 0.0;
        best.utility = 0.0;
        best.financeable = false;
        best.scenario_profit.assign(W, 0.0);
    }
    return best;
}

InsEnumerateResult ins_enumerate(const InsInput& input, GammaLink link) {
    const Market& mkt = *input.market;
    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t D = mkt.strips.size();
    const std::size_t C = input.candidates.size();

    // Per-candidate capacity grids.
    std::vector<std::vector<double>> grids(C);
    std::size_t combos = 1;
    for (std::size_t c = 0; c < C; ++c) {
        const GeneratorTech& tech = mkt.techs[static_cast<std::size_t>(input.candidates[c].tech_index)];
        const int n = static_cast<int>(std::exp2(input.candidates[c].expansion_bits));
        for (int i = 0; i < n; ++i) grids[c].push_back(tech.capacity_step * i);
        combos *= grids[c].size();
    }
    if ((static_cast<std::size_t>(1) << D) * combos > 2000000)
        throw std::invalid_argument("ins_enumerate: enumeration too large");

    std::vector<std::size_t> order(D);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mkt.strips[a].compensation_value > mkt.strips[b].compensation_value;
    });

    std::vector<double> probs(W);
    for (std::size_t w = 0; w < W; ++w) probs[w] = mkt.scenarios.scenarios[w].probability;

    InsEnumerateResult best;
    best.contracts.assign(D, 0);
    best.contracted_capacity.assign(C, 0.0);
    best.utility = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> idx(C, 0);
    for (std::size_t qmask = 0; qmask < (static_cast<std::size_t>(1) << D); ++qmask) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            double total_cap = 0.0, avail_cost = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                total_cap += grids[c][idx[c]];
                avail_cost += grids[c][idx[c]] * availability_price(mkt, input.candidates[c]);
            }
            double premium = 0.0;
            for (std::size_t d = 0; d < D; ++d)
                if (qmask & (static_cast<std::size_t>(1) << d))
                    premium += mkt.strips[d].premium_rate * mkt.strips[d].peak_demand;

            std::vector<double> profit(W, 0.0);
            for (std::size_t w = 0; w < W; ++w) {
                double payout = 0.0;
                const std::size_t T = mkt.scenarios.n_intervals(w);
                for (std::size_t t = 0; t < T; ++t) {
                    const double wt = mkt.scenarios.interval_weight(w, t);
                    if (link == GammaLink::paper_literal_link) {
                        for (std::size_t d = 0; d < D; ++d) {
                            if (!(qmask & (static_cast<std::size_t>(1) << d))) continue;
                            const double g = std::max(0.0, input.ex_ante_shed[w][d][t] - total_cap);
                            payout += wt * mkt.strips[d].compensation_value * g;
                        }
                    } else {
                        double remaining = total_cap;
                        for (std::size_t oi = 0; oi < D; ++oi) {
                            const std::size_t d = order[oi];
                            const double ante = input.ex_ante_shed[w][d][t];
                            const double restored = std::min(ante, remaining);
                            remaining -= restored;
                            if (qmask & (static_cast<std::size_t>(1) << d))
                                payout += wt * mkt.strips[d].compensation_value * (ante - restored);
                        }
                    }
                }
                profit[w] = premium - payout - avail_cost;
            }
            ++best.evaluations;
            const RiskAssessment risk = cvar(profit, probs, mkt.iolr.cvar_confidence);
            const bool feasible = risk.mean_profit >= -1e-9 &&
                                  risk.cvar + mkt.iolr.technical_reserves >= -1e-9;
            if (feasible) {
                const double utility = (1.0 - mkt.iolr.risk_weight) * risk.mean_profit +
                                       mkt.iolr.risk_weight * risk.cvar;
                if (utility > best.utility + 1e-9 * std::max(1.0, std::abs(utility))) {
                    best.utility = utility;
                    for (std::size_t d = 0; d < D; ++d)
                        best.contracts[d] = (qmask & (static_cast<std::size_t>(1) << d)) ? 1 : 0;
                    for (std::size_t c = 0; c < C; ++c) best.contracted_capacity[c] = grids[c][idx[c]];
                    best.scenario_profit = profit;
                }
            }
            // Advance the cartesian index.
            std::size_t c = 0;
            for (; c < C; ++c) {
                if (++idx[c] < grids[c].size()) break;
                idx[c] = 0;
            }
            if (c == C) break;
        }
    }
    return best;
}

std::vector<std::pair<int, int>> ward_reference_merges(const std::vector<std::vector<double>>& x,
                                                       std::size_t k) {
    const std::size_t n = x.size();
    if (k < 1 || k > n) throw std::invalid_argument("ward_reference_merges: bad k");
    struct Cluster {
        int id;
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) active.push_back({static_cast<int>(i), {i}});
    const std::size_t dim = n ? x[0].size() : 0;

    auto centroid = [&](const Cluster& c) {
        std::vector<double> m(dim, 0.0);
        for (std::size_t i : c.members)
            for (std::size_t f = 0; f < dim; ++f) m[f] += x[i][f];
        for (double& v : m) v /= static_cast<double>(c.members.size());
        return m;
    };

    std::vector<std::pair<int, int>> merges;
    while (active.size() > k) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const auto ci = centroid(active[i]);
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const auto cj = centroid(active[j]);
                double dist2 = 0.0;
                for (std::size_t f = 0; f < dim; ++f) {
                    const double d = ci[f] - cj[f];
                    dist2 += d * d;
                }
                const double na = static_cast<double>(active[i].members.size());
                const double nb = static_cast<double>(active[j].members.size());
                // Increase in total within-cluster sum of squares.
                const double delta = na * nb / (na + nb) * dist2;
                int ia = std::min(active[i].id, active[j].id);
                int ib = std::max(active[i].id, active[j].id);
                int ba = std::min(active[bi].id, active[bj].id);
                int bb = std::max(active[bi].id, active[bj].id);
                if (delta < best || (delta == best && (ia < ba || (ia == ba && ib < bb)))) {
                    best = delta;
                    bi = i;
                    bj = j;
                }
            }
        }
        auto& a = active[bi];
        auto& b = active[bj];
        merges.emplace_back(std::min(a.id, b.id), std::max(a.id, b.id));
        a.members.insert(a.members.end(), b.members.begin(), b.members.end());
        a.id = std::min(a.id, b.id);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return merges;
}

} // namespace eimlab::oracle
