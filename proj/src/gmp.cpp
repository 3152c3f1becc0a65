#include "eimlab/gmp.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace eimlab {

using solver::kInf;
using solver::ModelHandle;
using solver::ObjSense;
using solver::RowSense;
using solver::Term;
using solver::VarKind;

namespace {

std::string tag(const char* base, std::size_t w) { return std::string(base) + "_" + std::to_string(w); }
std::string tag(const char* base, std::size_t w, std::size_t a) {
    return std::string(base) + "_" + std::to_string(w) + "_" + std::to_string(a);
}
std::string tag(const char* base, std::size_t w, std::size_t a, std::size_t b) {
    return std::string(base) + "_" + std::to_string(w) + "_" + std::to_string(a) + "_" + std::to_string(b);
}

// Four-inequality McCormick envelope for product = bit * factor with
// factor in [0, ub]. Exact at binary bit values.
void add_envelope(ModelHandle& m, const std::string& name, int product, int bit, int factor,
                  double ub) {
    if (!std::isfinite(ub)) throw std::invalid_argument("build_gmp: envelope requires a finite dual bound");
    m.add_row(name + "_a", RowSense::le, 0.0, {Term{product, 1.0}, Term{bit, -ub}});
    m.add_row(name + "_b", RowSense::le, 0.0, {Term{product, 1.0}, Term{factor, -1.0}});
    m.add_row(name + "_c", RowSense::ge, -ub, {Term{product, 1.0}, Term{factor, -1.0}, Term{bit, -ub}});
    m.add_row(name + "_d", RowSense::ge, 0.0, {Term{product, 1.0}});
}

} // namespace

// Lower-level unit list with flat-availability rivals of the same tech
// merged into one aggregate column: the clearing optimum, prices and the
// acting unit's dispatch are unchanged (equal-cost capacity is
// interchangeable), and the embedded blocks shrink accordingly.
std::vector<GmpBlockUnit> gmp_block_units(const GmpInstance& inst) {
    const Market& mkt = *inst.market;
    std::vector<GmpBlockUnit> blocks;
    blocks.push_back({inst.acting, mkt.units[inst.acting].tech_index, 0.0, true});
    std::map<int, std::size_t> merged; // tech -> block index (flat rivals)
    for (std::size_t g = 0; g < mkt.units.size(); ++g) {
        if (g == inst.acting) continue;
        const GeneratorUnit& u = mkt.units[g];
        const double cap = inst.rival_cap(g);
        if (cap <= 0.0) continue;
        if (!u.has_profile()) {
            auto [it, inserted] = merged.try_emplace(u.tech_index, blocks.size());
            if (inserted) blocks.push_back({g, u.tech_index, cap, false});
            else blocks[it->second].capacity += cap;
        } else {
            blocks.push_back({g, u.tech_index, cap, false});
        }
    }
    return blocks;
}

GmpModel build_gmp(const GmpInstance& inst) {
    const Market& mkt = *inst.market;
    if (inst.acting >= mkt.units.size()) throw std::invalid_argument("build_gmp: acting unit out of range");
    const GeneratorUnit& acting = mkt.units[inst.acting];
    const GeneratorTech& tech = mkt.tech_of(acting);
    const int K = tech.expansion_bits;
    const double step = tech.capacity_step;
    const double maxcap = tech.max_capacity();
    const double ceiling = mkt.shed_ceiling();
    if (!std::isfinite(ceiling) || ceiling <= 0.0)
        throw std::invalid_argument("build_gmp: price ceiling must be finite and positive");
    const ShedCostMode mode = mkt.config.shed_cost_mode;
    const bool aggregate = mkt.config.aggregate_dual_products;
    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t D = mkt.strips.size();
    const std::size_t S = mode == ShedCostMode::paper_literal ? D : 1;

    GmpModel gm;
    gm.blocks = gmp_block_units(inst);
    const auto& blocks = gm.blocks;
    const std::size_t G = blocks.size();
    gm.n_shed_vars = S;
    ModelHandle& m = gm.model;
    m.set_objective_sense(ObjSense::maximize);

    for (int k = 0; k < K; ++k) gm.bit_vars.push_back(m.add_var("bit_" + std::to_string(k), 0, 1, VarKind::binary));
    gm.cap_var = m.add_var("cap", 0.0, maxcap);
    {
        std::vector<Term> ts{{gm.cap_var, 1.0}};
        for (int k = 0; k < K; ++k) ts.push_back({gm.bit_vars[static_cast<std::size_t>(k)], -step * std::exp2(k)});
        m.add_row("capdef", RowSense::eq, 0.0, std::span<const Term>(ts.data(), ts.size()));
    }
    const int z_var = m.add_var("z", -kInf, kInf);
    gm.cvar_var = m.add_var("cvar", -kInf, kInf);

    gm.profit_vars.resize(W);
    gm.p_vars.resize(W);
    gm.shed_vars.resize(W);
    gm.lambda_vars.resize(W);
    gm.mu_up_gen_vars.resize(W);
    gm.mu_up_shed_vars.resize(W);
    std::vector<int> rho_vars(W);

    for (std::size_t w = 0; w < W; ++w) {
        const std::size_t T = mkt.scenarios.n_intervals(w);
        auto& pv = gm.p_vars[w];
        auto& sv = gm.shed_vars[w];
        auto& lv = gm.lambda_vars[w];
        auto& ugv = gm.mu_up_gen_vars[w];
        auto& usv = gm.mu_up_shed_vars[w];
        pv.assign(G * T, -1);
        sv.assign(S * T, -1);
        lv.assign(T, -1);
        ugv.assign(G * T, -1);
        usv.assign(S * T, -1);

        auto avail = [&](std::size_t b, std::size_t t) {
            return mkt.units[blocks[b].rep_unit].availability_at(w, t);
        };
        auto cvc_of = [&](std::size_t b) {
            return mkt.techs[static_cast<std::size_t>(blocks[b].tech_index)].variable_cost;
        };

        // Lower-level primal variables.
        for (std::size_t b = 0; b < G; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const double ub = b == 0 ? maxcap * avail(0, t) : blocks[b].capacity * avail(b, t);
                pv[b * T + t] = m.add_var(tag("p", w, b, t), 0.0, ub);
            }
        std::vector<double> shed_cost(S), demand(T, 0.0);
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t t = 0; t < T; ++t) demand[t] += mkt.scenarios.strip_demand(w, d, t);
        for (std::size_t s = 0; s < S; ++s) {
            shed_cost[s] = mode == ShedCostMode::paper_literal ? mkt.strips[s].compensation_value
                                                               : mkt.config.price_cap;
            for (std::size_t t = 0; t < T; ++t) {
                const double ub = mode == ShedCostMode::paper_literal
                                      ? mkt.scenarios.strip_demand(w, s, t)
                                      : demand[t];
                sv[s * T + t] = m.add_var(tag("sh", w, s, t), 0.0, ub);
            }
        }

        // Lower-level duals, in weighted units (lambda_w = w_t * price).
        for (std::size_t t = 0; t < T; ++t) {
            const double wt = mkt.scenarios.interval_weight(w, t);
            lv[t] = m.add_var(tag("lam", w, t), 0.0, wt * ceiling);
        }
        for (std::size_t b = 0; b < G; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                ugv[b * T + t] = m.add_var(tag("mug", w, b, t), 0.0,
                                           std::max(0.0, wt * (ceiling - cvc_of(b))));
            }
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                usv[s * T + t] = m.add_var(tag("mus", w, s, t), 0.0,
                                           std::max(0.0, wt * (ceiling - shed_cost[s])));
            }

        // Primal rows: power balance and the acting unit's capacity link.
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<Term> ts;
            for (std::size_t b = 0; b < G; ++b) ts.push_back({pv[b * T + t], 1.0});
            for (std::size_t s = 0; s < S; ++s) ts.push_back({sv[s * T + t], 1.0});
            m.add_row(tag("bal", w, t), RowSense::eq, demand[t], std::span<const Term>(ts.data(), ts.size()));
            const double av = avail(0, t);
            m.add_row(tag("acap", w, t), RowSense::le, 0.0,
                      {Term{pv[0 * T + t], 1.0}, Term{gm.cap_var, -av}});
        }

        // Dual rows; the slack of each is the lower-bound multiplier.
        for (std::size_t b = 0; b < G; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                m.add_row(tag("dualg", w, b, t), RowSense::le, wt * cvc_of(b),
                          {Term{lv[t], 1.0}, Term{ugv[b * T + t], -1.0}});
            }
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                m.add_row(tag("dualsh", w, s, t), RowSense::le, wt * shed_cost[s],
                          {Term{lv[t], 1.0}, Term{usv[s * T + t], -1.0}});
            }

        // Bit x dual products: the acting generator's cap*A*mu_up term, used
        // by both the profit definition and the strong-duality row.
        std::vector<Term> product_profit_terms; // coefficient includes step*2^k
        std::vector<int> products;
        if (!aggregate) {
            for (int k = 0; k < K; ++k)
                for (std::size_t t = 0; t < T; ++t) {
                    const double wt = mkt.scenarios.interval_weight(w, t);
                    const double av = avail(0, t);
                    const double ub = std::max(0.0, wt * (ceiling - tech.variable_cost));
                    const int prod = m.add_var(tag("w", w, static_cast<std::size_t>(k), t), -kInf, kInf);
                    add_envelope(m, tag("env", w, static_cast<std::size_t>(k), t), prod,
                                 gm.bit_vars[static_cast<std::size_t>(k)], ugv[0 * T + t], ub);
                    if (av != 0.0) product_profit_terms.push_back({prod, step * std::exp2(k) * av});
                    products.push_back(prod);
                }
        } else {
            // Aggregate M_w = sum_t A_t mu_up_t once per scenario, then
            // linearize bit x M_w.
            double um = 0.0;
            std::vector<Term> mts;
            const int mvar = m.add_var(tag("magg", w), 0.0, kInf);
            mts.push_back({mvar, 1.0});
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                const double av = avail(0, t);
                um += av * std::max(0.0, wt * (ceiling - tech.variable_cost));
                if (av != 0.0) mts.push_back({ugv[0 * T + t], -av});
            }
            m.set_bounds(mvar, 0.0, um);
            m.add_row(tag("maggdef", w), RowSense::eq, 0.0, std::span<const Term>(mts.data(), mts.size()));
            for (int k = 0; k < K; ++k) {
                const int prod = m.add_var(tag("w", w, static_cast<std::size_t>(k)), -kInf, kInf);
                add_envelope(m, tag("env", w, static_cast<std::size_t>(k)), prod,
                             gm.bit_vars[static_cast<std::size_t>(k)], mvar, um);
                product_profit_terms.push_back({prod, step * std::exp2(k)});
                products.push_back(prod);
            }
        }
        gm.product_vars.push_back(products);

        // Profit definition: psi = sum of product terms - fixed cost * cap.
        gm.profit_vars[w] = m.add_var(tag("psi", w), -kInf, kInf);
        {
            std::vector<Term> ts{{gm.profit_vars[w], 1.0}, {gm.cap_var, tech.fixed_cost}};
            for (const Term& pt : product_profit_terms) ts.push_back({pt.var, -pt.coef});
            m.add_row(tag("profit", w), RowSense::eq, 0.0, std::span<const Term>(ts.data(), ts.size()));
        }

        // Strong duality: weighted primal cost equals the dual objective.
        {
            std::vector<Term> ts;
            for (std::size_t b = 0; b < G; ++b) {
                const double cvc = cvc_of(b);
                if (cvc == 0.0) continue;
                for (std::size_t t = 0; t < T; ++t) {
                    const double wt = mkt.scenarios.interval_weight(w, t);
                    ts.push_back({pv[b * T + t], wt * cvc});
                }
            }
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t t = 0; t < T; ++t) {
                    const double wt = mkt.scenarios.interval_weight(w, t);
                    ts.push_back({sv[s * T + t], wt * shed_cost[s]});
                }
            for (std::size_t t = 0; t < T; ++t) ts.push_back({lv[t], -demand[t]});
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t t = 0; t < T; ++t) {
                    const double ub = mode == ShedCostMode::paper_literal
                                          ? mkt.scenarios.strip_demand(w, s, t)
                                          : demand[t];
                    if (ub != 0.0) ts.push_back({usv[s * T + t], ub});
                }
            for (std::size_t b = 1; b < G; ++b) {
                const double capb = blocks[b].capacity;
                for (std::size_t t = 0; t < T; ++t) {
                    const double av = avail(b, t);
                    if (av != 0.0) ts.push_back({ugv[b * T + t], capb * av});
                }
            }
            for (const Term& pt : product_profit_terms) ts.push_back({pt.var, pt.coef});
            m.add_row(tag("sd", w), RowSense::eq, 0.0, std::span<const Term>(ts.data(), ts.size()));
        }

        // CVaR deviation row.
        rho_vars[w] = m.add_var(tag("rho", w), 0.0, kInf);
        m.add_row(tag("cvdev", w), RowSense::le, 0.0,
                  {Term{z_var, 1.0}, Term{gm.profit_vars[w], -1.0}, Term{rho_vars[w], -1.0}});
    }

    // CVaR definition, financing rows, objective.
    const double alpha = tech.cvar_confidence;
    const double beta = tech.risk_weight;
    {
        std::vector<Term> ts{{gm.cvar_var, 1.0}, {z_var, -1.0}};
        for (std::size_t w = 0; w < W; ++w)
            ts.push_back({rho_vars[w], mkt.scenarios.scenarios[w].probability / (1.0 - alpha)});
        m.add_row("cvdef", RowSense::eq, 0.0, std::span<const Term>(ts.data(), ts.size()));
    }
    {
        std::vector<Term> ts{{gm.cap_var, -tech.wacc() * tech.investment_cost}};
        for (std::size_t w = 0; w < W; ++w)
            ts.push_back({gm.profit_vars[w], mkt.scenarios.scenarios[w].probability});
        m.add_row("fin_eq", RowSense::ge, 0.0, std::span<const Term>(ts.data(), ts.size()));
    }
    m.add_row("fin_debt", RowSense::ge, 0.0,
              {Term{gm.cvar_var, 1.0}, Term{gm.cap_var, -tech.debt_rate * tech.gearing * tech.investment_cost}});

    for (std::size_t w = 0; w < W; ++w)
        m.set_obj_coef(gm.profit_vars[w], (1.0 - beta) * mkt.scenarios.scenarios[w].probability);
    m.set_obj_coef(gm.cvar_var, beta);
    return gm;
}

GmpSolution solve_gmp(const GmpInstance& inst, double gap) {
    const Market& mkt = *inst.market;
    GmpModel gm = build_gmp(inst);
    solver::SolveOptions opts;
    opts.gap = gap;
    const solver::Solution sol = solver::solve(gm.model, opts);

    GmpSolution out;
    out.status = sol.status;
    out.gap = sol.gap;
    out.iterations = sol.iterations;
    out.nodes = sol.nodes;
    if (!sol.feasible()) return out;

    const GeneratorTech& tech = mkt.tech_of(mkt.units[inst.acting]);
    for (int b : gm.bit_vars) out.bits.push_back(static_cast<int>(std::llround(sol.primal[static_cast<std::size_t>(b)])));
    // Capacity from the rounded bits: an exact step multiple (the cap
    // variable is basic and carries solver-level noise).
    out.capacity = 0.0;
    for (std::size_t k = 0; k < out.bits.size(); ++k)
        out.capacity += tech.capacity_step * std::exp2(static_cast<double>(k)) * out.bits[k];
    out.utility = sol.objective;

    const std::size_t W = mkt.scenarios.n_scenarios();
    const auto& blocks = gm.blocks;
    const std::size_t G = blocks.size();
    const std::size_t S = gm.n_shed_vars;
    std::vector<double> probs(W);
    for (std::size_t w = 0; w < W; ++w) {
        probs[w] = mkt.scenarios.scenarios[w].probability;
        out.scenario_profit.push_back(sol.primal[static_cast<std::size_t>(gm.profit_vars[w])]);
    }
    out.risk = cvar(out.scenario_profit, probs, tech.cvar_confidence);

    // Reconstruct the embedded lower-level blocks in natural units. Arrays
    // are indexed by lower-level block (acting first, merged rivals after),
    // mirroring gm.blocks.
    const ShedCostMode mode = mkt.config.shed_cost_mode;
    for (std::size_t w = 0; w < W; ++w) {
        const std::size_t T = mkt.scenarios.n_intervals(w);
        DispatchOutcome o;
        o.scenario = w;
        o.mode = mode;
        o.n_intervals = T;
        o.price.resize(T);
        o.settled_price.resize(T);
        o.total_shed.assign(T, 0.0);
        o.dispatch.assign(G, std::vector<double>(T, 0.0));
        o.gen_limit.assign(G, std::vector<double>(T, 0.0));
        o.gen_cost.resize(G);
        o.mu_up_gen.assign(G, std::vector<double>(T, 0.0));
        o.mu_lo_gen.assign(G, std::vector<double>(T, 0.0));
        o.shed_lp.assign(S, std::vector<double>(T, 0.0));
        o.mu_up_shed.assign(S, std::vector<double>(T, 0.0));
        o.mu_lo_shed.assign(S, std::vector<double>(T, 0.0));
        o.shed_cost.resize(S);
        o.shed_ub.assign(T, 0.0);
        o.strip_demand.assign(mkt.strips.size(), std::vector<double>(T, 0.0));
        for (std::size_t d = 0; d < mkt.strips.size(); ++d)
            for (std::size_t t = 0; t < T; ++t) o.strip_demand[d][t] = mkt.scenarios.strip_demand(w, d, t);
        for (std::size_t s = 0; s < S; ++s)
            o.shed_cost[s] = mode == ShedCostMode::paper_literal ? mkt.strips[s].compensation_value
                                                                 : mkt.config.price_cap;
        for (std::size_t t = 0; t < T; ++t) {
            const double wt = mkt.scenarios.interval_weight(w, t);
            o.price[t] = sol.primal[static_cast<std::size_t>(gm.lambda_vars[w][t])] / wt;
            o.settled_price[t] = std::min(o.price[t], mkt.config.price_cap);
            double dem = 0.0;
            for (const auto& sd : o.strip_demand) dem += sd[t];
            o.shed_ub[t] = dem;
        }
        for (std::size_t b = 0; b < G; ++b) {
            o.gen_cost[b] = mkt.techs[static_cast<std::size_t>(blocks[b].tech_index)].variable_cost;
            const double capb = b == 0 ? out.capacity : blocks[b].capacity;
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                o.dispatch[b][t] = sol.primal[static_cast<std::size_t>(gm.p_vars[w][b * T + t])];
                o.gen_limit[b][t] = capb * mkt.units[blocks[b].rep_unit].availability_at(w, t);
                const double mu_up = sol.primal[static_cast<std::size_t>(gm.mu_up_gen_vars[w][b * T + t])] / wt;
                o.mu_up_gen[b][t] = mu_up;
                o.mu_lo_gen[b][t] = std::max(0.0, o.gen_cost[b] - o.price[t] + mu_up);
            }
        }
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t t = 0; t < T; ++t) {
                const double wt = mkt.scenarios.interval_weight(w, t);
                const double v = sol.primal[static_cast<std::size_t>(gm.shed_vars[w][s * T + t])];
                o.shed_lp[s][t] = v;
                o.total_shed[t] += v;
                const double mu_up = sol.primal[static_cast<std::size_t>(gm.mu_up_shed_vars[w][s * T + t])] / wt;
                o.mu_up_shed[s][t] = mu_up;
                o.mu_lo_shed[s][t] = std::max(0.0, o.shed_cost[s] - o.price[t] + mu_up);
            }
        out.embedded.push_back(std::move(o));
    }

    out.products.resize(W);
    for (std::size_t w = 0; w < W; ++w)
        for (int pvid : gm.product_vars[w])
            out.products[w].push_back(sol.primal[static_cast<std::size_t>(pvid)]);
    return out;
}

GmpAudit audit_solution(const GmpInstance& inst, const GmpSolution& solution) {
    const Market& mkt = *inst.market;
    const GeneratorUnit& acting = mkt.units[inst.acting];
    const GeneratorTech& tech = mkt.tech_of(acting);
    GmpAudit audit;

    const double q = solution.capacity / tech.capacity_step;
    audit.capacity_on_grid = std::abs(q - std::round(q)) < 1e-6;

    // Independent path: re-clear every scenario with the dispatch engine at
    // the returned capacities and recompute profits from its prices.
    Market re = mkt;
    for (std::size_t g = 0; g < re.units.size(); ++g)
        re.units[g].capacity = g == inst.acting ? solution.capacity : inst.rival_cap(g);
    std::vector<double> recomputed(mkt.scenarios.n_scenarios(), 0.0);
    for (std::size_t w = 0; w < mkt.scenarios.n_scenarios(); ++w) {
        const DispatchOutcome o = clear_scenario(re, w, mkt.config.shed_cost_mode);
        double margin = 0.0;
        for (std::size_t t = 0; t < o.n_intervals; ++t) {
            const double wt = mkt.scenarios.interval_weight(w, t);
            margin += wt * (o.price[t] - tech.variable_cost) * o.dispatch[inst.acting][t];
        }
        recomputed[w] = margin - tech.fixed_cost * solution.capacity;
    }
    for (std::size_t w = 0; w < recomputed.size(); ++w) {
        const double div = std::abs(solution.scenario_profit[w] - recomputed[w]) /
                           std::max(1.0, std::abs(recomputed[w]));
        audit.max_profit_divergence_rel = std::max(audit.max_profit_divergence_rel, div);
    }

    for (const DispatchOutcome& o : solution.embedded) {
        const Lemma1Report rep = verify_lemma1(o);
        audit.max_lemma1_residual = std::max(audit.max_lemma1_residual, rep.max_residual);
        audit.max_slackness_residual = std::max(audit.max_slackness_residual, rep.max_slackness);
    }

    // McCormick exactness at the incumbent: product == bit * factor. The
    // acting unit is block 0 of the embedded outcomes.
    const bool aggregate = mkt.config.aggregate_dual_products;
    for (std::size_t w = 0; w < solution.products.size(); ++w) {
        const DispatchOutcome& o = solution.embedded[w];
        const std::size_t T = o.n_intervals;
        const std::size_t K = solution.bits.size();
        for (std::size_t k = 0; k < K; ++k) {
            if (aggregate) {
                double magg = 0.0;
                for (std::size_t t = 0; t < T; ++t) {
                    const double wt = mkt.scenarios.interval_weight(w, t);
                    magg += acting.availability_at(w, t) * o.mu_up_gen[0][t] * wt;
                }
                const double expect = solution.bits[k] * magg;
                audit.max_envelope_violation = std::max(
                    audit.max_envelope_violation, std::abs(solution.products[w][k] - expect));
            } else {
                for (std::size_t t = 0; t < T; ++t) {
                    const double wt = mkt.scenarios.interval_weight(w, t);
                    const double expect = solution.bits[k] * o.mu_up_gen[0][t] * wt;
                    audit.max_envelope_violation =
                        std::max(audit.max_envelope_violation,
                                 std::abs(solution.products[w][k * T + t] - expect));
                }
            }
        }
    }

    audit.financing = financing_check(solution.risk.mean_profit, solution.risk.cvar, tech,
                                      solution.capacity);
    return audit;
}

} // namespace eimlab
