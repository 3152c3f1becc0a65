#include "eimlab/ins.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eimlab {

using solver::kInf;
using solver::ModelHandle;
using solver::ObjSense;
using solver::RowSense;
using solver::Term;
using solver::VarKind;

double availability_price(const Market& market, const InsCandidate& c) {
    const GeneratorTech& t = market.techs[static_cast<std::size_t>(c.tech_index)];
    return t.availability_price();
}

namespace {

std::string tag(const char* base, std::size_t a) { return std::string(base) + "_" + std::to_string(a); }
std::string tag(const char* base, std::size_t a, std::size_t b) {
    return std::string(base) + "_" + std::to_string(a) + "_" + std::to_string(b);
}
std::string tag(const char* base, std::size_t a, std::size_t b, std::size_t c) {
    return std::string(base) + "_" + std::to_string(a) + "_" + std::to_string(b) + "_" + std::to_string(c);
}

// Strip order by descending compensation value: the cascade restores the
// most valuable load first.
std::vector<std::size_t> restore_order(const Market& m) {
    std::vector<std::size_t> order(m.strips.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return m.strips[a].compensation_value > m.strips[b].compensation_value;
    });
    return order;
}

} // namespace

InsModel build_ins(const InsInput& input, GammaLink link, bool eom) {
    const Market& mkt = *input.market;
    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t D = mkt.strips.size();
    if (input.ex_ante_shed.size() != W) throw std::invalid_argument("build_ins: shed scenario count mismatch");

    InsModel im;
    ModelHandle& m = im.model;
    m.set_objective_sense(ObjSense::maximize);
    const double beta = mkt.iolr.risk_weight;
    const double alpha = mkt.iolr.cvar_confidence;

    for (std::size_t d = 0; d < D; ++d) {
        const int q = m.add_var(tag("q", d), 0, eom ? 0 : 1, VarKind::binary);
        im.q_vars.push_back(q);
    }
    // Contracted capacity, step-discretized like independent units.
    double total_cap_ub = 0.0;
    std::vector<std::vector<int>> cap_bits(input.candidates.size());
    for (std::size_t c = 0; c < input.candidates.size(); ++c) {
        const GeneratorTech& tech = mkt.techs[static_cast<std::size_t>(input.candidates[c].tech_index)];
        const int K = input.candidates[c].expansion_bits;
        const double maxcap = tech.capacity_step * (std::exp2(K) - 1.0);
        total_cap_ub += maxcap;
        const int cap = m.add_var(tag("ncap", c), 0.0, maxcap);
        im.cap_vars.push_back(cap);
        std::vector<Term> ts{{cap, 1.0}};
        for (int k = 0; k < K; ++k) {
            const int b = m.add_var(tag("nbit", c, static_cast<std::size_t>(k)), 0, 1, VarKind::binary);
            cap_bits[c].push_back(b);
            ts.push_back({b, -tech.capacity_step * std::exp2(k)});
        }
        m.add_row(tag("ncapdef", c), RowSense::eq, 0.0, std::span<const Term>(ts.data(), ts.size()));
    }

    const int z_var = m.add_var("z", -kInf, kInf);
    im.cvar_var = m.add_var("cvar", -kInf, kInf);
    std::vector<int> rho_vars(W);

    im.gamma_vars.assign(W, std::vector<std::vector<int>>(D));
    const auto order = restore_order(mkt);

    for (std::size_t w = 0; w < W; ++w) {
        const std::size_t T = mkt.scenarios.n_intervals(w);
        for (std::size_t d = 0; d < D; ++d) im.gamma_vars[w][d].assign(T, -1);

        // Profit terms accumulate into one equality row per scenario.
        std::vector<Term> profit_terms;
        const int psi = m.add_var(tag("ipsi", w), -kInf, kInf);
        im.profit_vars.push_back(psi);
        profit_terms.push_back({psi, 1.0});
        for (std::size_t d = 0; d < D; ++d)
            profit_terms.push_back(
                {im.q_vars[d], -mkt.strips[d].premium_rate * mkt.strips[d].peak_demand});
        for (std::size_t c = 0; c < input.candidates.size(); ++c)
            profit_terms.push_back({im.cap_vars[c], availability_price(mkt, input.candidates[c])});

        for (std::size_t t = 0; t < T; ++t) {
            const double wt = mkt.scenarios.interval_weight(w, t);
            // Total ex-ante shed at (t, omega); skip intervals without any.
            double total_shed = 0.0;
            for (std::size_t d = 0; d < D; ++d) total_shed += input.ex_ante_shed[w][d][t];
            if (total_shed <= 1e-12) continue;

            std::vector<int> gammas(D, -1);
            for (std::size_t d = 0; d < D; ++d) {
                const double ub = input.ex_ante_shed[w][d][t];
                if (ub <= 1e-12 && link == GammaLink::paper_literal_link) continue;
                const int g = m.add_var(tag("gamma", w, d, t), 0.0, ub);
                gammas[d] = g;
                im.gamma_vars[w][d][t] = g;
                if (link == GammaLink::paper_literal_link) {
                    // gamma >= ex-ante shed - total contracted MW (per strip).
                    std::vector<Term> ts{{g, 1.0}};
                    for (int cv : im.cap_vars) ts.push_back({cv, 1.0});
                    m.add_row(tag("glink", w, d, t), RowSense::ge, ub,
                              std::span<const Term>(ts.data(), ts.size()));
                }
            }
            if (link == GammaLink::cascade_link) {
                // Cumulative equalities over strips in restore order (highest
                // compensation first): the ex-post shed of each leading group
                // equals max(0, its ex-ante shed - contracted MW), pinned
                // exactly with one binary per group.
                double suffix = 0.0;
                std::vector<Term> suffix_terms;
                for (std::size_t oi = 0; oi < order.size(); ++oi) {
                    const std::size_t d = order[oi];
                    if (gammas[d] < 0) continue;
                    suffix += input.ex_ante_shed[w][d][t];
                    suffix_terms.push_back({gammas[d], 1.0});
                    std::vector<Term> lo = suffix_terms;
                    for (int cv : im.cap_vars) lo.push_back({cv, 1.0});
                    m.add_row(tag("gcasc_lo", w, d, t), RowSense::ge, suffix,
                              std::span<const Term>(lo.data(), lo.size()));
                    const int u = m.add_var(tag("gcascb", w, d, t), 0, 1, VarKind::binary);
                    // u = 0: suffix gamma <= suffix shed - contracted;
                    // u = 1: suffix gamma <= 0.
                    std::vector<Term> up0 = suffix_terms;
                    for (int cv : im.cap_vars) up0.push_back({cv, 1.0});
                    up0.push_back({u, -total_cap_ub});
                    m.add_row(tag("gcasc_up0", w, d, t), RowSense::le, suffix,
                              std::span<const Term>(up0.data(), up0.size()));
                    std::vector<Term> up1 = suffix_terms;
                    up1.push_back({u, suffix});
                    m.add_row(tag("gcasc_up1", w, d, t), RowSense::le, suffix,
                              std::span<const Term>(up1.data(), up1.size()));
                }
            }
            // Payout products s = gamma * Q, McCormick with gamma <= ex-ante
            // shed as the bound.
            for (std::size_t d = 0; d < D; ++d) {
                if (gammas[d] < 0) continue;
                const double ub = input.ex_ante_shed[w][d][t];
                const int s = m.add_var(tag("pay", w, d, t), -kInf, kInf);
                m.add_row(tag("penv_a", w, d, t), RowSense::le, 0.0, {Term{s, 1.0}, Term{im.q_vars[d], -ub}});
                m.add_row(tag("penv_b", w, d, t), RowSense::le, 0.0, {Term{s, 1.0}, Term{gammas[d], -1.0}});
                m.add_row(tag("penv_c", w, d, t), RowSense::ge, -ub,
                          {Term{s, 1.0}, Term{gammas[d], -1.0}, Term{im.q_vars[d], -ub}});
                m.add_row(tag("penv_d", w, d, t), RowSense::ge, 0.0, {Term{s, 1.0}});
                profit_terms.push_back({s, wt * mkt.strips[d].compensation_value});
            }
        }
        m.add_row(tag("iprofit", w), RowSense::eq, 0.0,
                  std::span<const Term>(profit_terms.data(), profit_terms.size()));

        rho_vars[w] = m.add_var(tag("rho", w), 0.0, kInf);
        m.add_row(tag("cvdev", w), RowSense::le, 0.0,
                  {Term{z_var, 1.0}, Term{psi, -1.0}, Term{rho_vars[w], -1.0}});
    }

    {
        std::vector<Term> ts{{im.cvar_var, 1.0}, {z_var, -1.0}};
        for (std::size_t w = 0; w < W; ++w)
            ts.push_back({rho_vars[w], mkt.scenarios.scenarios[w].probability / (1.0 - alpha)});
        m.add_row("cvdef", RowSense::eq, 0.0, std::span<const Term>(ts.data(), ts.size()));
    }
    {
        // Profitable in expectation.
        std::vector<Term> ts;
        for (std::size_t w = 0; w < W; ++w)
            ts.push_back({im.profit_vars[w], mkt.scenarios.scenarios[w].probability});
        m.add_row("expectation", RowSense::ge, 0.0, std::span<const Term>(ts.data(), ts.size()));
    }
    // Prudential reserve constraint.
    m.add_row("prudential", RowSense::ge, -mkt.iolr.technical_reserves, {Term{im.cvar_var, 1.0}});

    for (std::size_t w = 0; w < W; ++w)
        m.set_obj_coef(im.profit_vars[w], (1.0 - beta) * mkt.scenarios.scenarios[w].probability);
    m.set_obj_coef(im.cvar_var, beta);
    return im;
}

IolrDecision solve_ins(const InsInput& input, GammaLink link, bool eom, double gap) {
    const Market& mkt = *input.market;
    InsModel im = build_ins(input, link, eom);
    solver::SolveOptions opts;
    opts.gap = gap;
    const solver::Solution sol = solver::solve(im.model, opts);

    IolrDecision out;
    out.status = sol.status;
    out.gap = sol.gap;
    out.iterations = sol.iterations;
    out.nodes = sol.nodes;
    if (!sol.feasible()) return out;

    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t D = mkt.strips.size();
    for (int q : im.q_vars) out.contracts.push_back(static_cast<int>(std::llround(sol.primal[static_cast<std::size_t>(q)])));
    // Contracted capacities snapped to their step grid (the cap variables
    // are basic and carry solver-level noise).
    for (std::size_t c = 0; c < im.cap_vars.size(); ++c) {
        const double step =
            mkt.techs[static_cast<std::size_t>(input.candidates[c].tech_index)].capacity_step;
        const double raw = sol.primal[static_cast<std::size_t>(im.cap_vars[c])];
        out.contracted_capacity.push_back(step * std::round(raw / step));
    }
    const double total_cap =
        std::accumulate(out.contracted_capacity.begin(), out.contracted_capacity.end(), 0.0);

    std::vector<double> probs(W);
    for (std::size_t w = 0; w < W; ++w) {
        probs[w] = mkt.scenarios.scenarios[w].probability;
        out.milp_scenario_profit.push_back(sol.primal[static_cast<std::size_t>(im.profit_vars[w])]);
    }
    out.utility = sol.objective;

    // Ex-post shed, normalized to the analytic formula of the linking mode;
    // where no optimization pressure existed (uninsured strips) the solver's
    // gamma is free, so the formula is the canonical value.
    out.ex_post_shed.assign(W, std::vector<std::vector<double>>(D));
    const auto order = restore_order(mkt);
    for (std::size_t w = 0; w < W; ++w) {
        const std::size_t T = mkt.scenarios.n_intervals(w);
        for (std::size_t d = 0; d < D; ++d) out.ex_post_shed[w][d].assign(T, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            if (link == GammaLink::paper_literal_link) {
                for (std::size_t d = 0; d < D; ++d)
                    out.ex_post_shed[w][d][t] =
                        std::max(0.0, input.ex_ante_shed[w][d][t] - total_cap);
            } else {
                // Cascade: restore high-compensation strips first.
                double remaining = total_cap;
                for (std::size_t oi = 0; oi < order.size(); ++oi) {
                    const std::size_t d = order[oi];
                    const double ante = input.ex_ante_shed[w][d][t];
                    const double restored = std::min(ante, remaining);
                    out.ex_post_shed[w][d][t] = ante - restored;
                    remaining -= restored;
                }
            }
        }
    }

    // Cashflows recomputed term by term from the normalized decision; this
    // is the published profit vector (exactly zero when nothing is insured
    // or contracted), with the raw solver values kept for audits.
    double premium_income = 0.0, avail_cost = 0.0;
    for (std::size_t d = 0; d < D; ++d)
        premium_income += out.contracts[d] * mkt.strips[d].premium_rate * mkt.strips[d].peak_demand;
    for (std::size_t c = 0; c < input.candidates.size(); ++c)
        avail_cost += out.contracted_capacity[c] * availability_price(mkt, input.candidates[c]);
    for (std::size_t w = 0; w < W; ++w) {
        double payout = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
            if (!out.contracts[d]) continue;
            for (std::size_t t = 0; t < mkt.scenarios.n_intervals(w); ++t)
                payout += mkt.scenarios.interval_weight(w, t) * mkt.strips[d].compensation_value *
                          out.ex_post_shed[w][d][t];
        }
        out.scenario_profit.push_back(premium_income - payout - avail_cost);
    }
    out.risk = cvar(out.scenario_profit, probs, mkt.iolr.cvar_confidence);
    return out;
}

InsAudit audit_ins(const IolrDecision& decision, const InsInput& input) {
    const Market& mkt = *input.market;
    const std::size_t W = mkt.scenarios.n_scenarios();
    const std::size_t D = mkt.strips.size();
    InsAudit audit;

    std::vector<double> probs(W), recomputed(W, 0.0);
    double avail_cost = 0.0;
    for (std::size_t c = 0; c < input.candidates.size(); ++c)
        avail_cost += decision.contracted_capacity[c] * availability_price(mkt, input.candidates[c]);
    double premium_income = 0.0;
    for (std::size_t d = 0; d < D; ++d)
        premium_income +=
            decision.contracts[d] * mkt.strips[d].premium_rate * mkt.strips[d].peak_demand;

    for (std::size_t w = 0; w < W; ++w) {
        probs[w] = mkt.scenarios.scenarios[w].probability;
        double payout = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
            if (!decision.contracts[d]) continue;
            for (std::size_t t = 0; t < mkt.scenarios.n_intervals(w); ++t)
                payout += mkt.scenarios.interval_weight(w, t) * mkt.strips[d].compensation_value *
                          decision.ex_post_shed[w][d][t];
        }
        recomputed[w] = premium_income - payout - avail_cost;
        const double milp = decision.milp_scenario_profit.empty()
                                ? decision.scenario_profit[w]
                                : decision.milp_scenario_profit[w];
        audit.max_profit_divergence =
            std::max(audit.max_profit_divergence, std::abs(recomputed[w] - milp));
    }
    const RiskAssessment risk = cvar(recomputed, probs, mkt.iolr.cvar_confidence);
    audit.prudential_slack = risk.cvar + mkt.iolr.technical_reserves;
    audit.expectation_slack = risk.mean_profit;

    // Envelope exactness: with Q binary the payout product must equal
    // gamma * Q, i.e. the recomputed payouts already assume it; divergence
    // above covers it. Separately check gamma consistency with its bounds.
    for (std::size_t w = 0; w < W; ++w)
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t t = 0; t < mkt.scenarios.n_intervals(w); ++t) {
                const double g = decision.ex_post_shed[w][d][t];
                const double ub = input.ex_ante_shed[w][d][t];
                if (g < -1e-9 || g > ub + 1e-6)
                    audit.max_envelope_violation =
                        std::max(audit.max_envelope_violation, std::max(-g, g - ub));
            }

    const double scale = std::max(1.0, std::abs(premium_income) + std::abs(avail_cost));
    audit.pass = audit.max_profit_divergence <= 1e-6 * scale &&
                 audit.max_envelope_violation <= 1e-6 &&
                 audit.prudential_slack >= -1e-6 * scale && audit.expectation_slack >= -1e-6 * scale;
    return audit;
}

} // namespace eimlab
