#include "eimlab/risk.hpp"

#include "eimlab/solver/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eimlab {

RiskAssessment cvar(std::span<const double> profits, std::span<const double> probs, double alpha) {
    if (profits.empty()) throw std::invalid_argument("cvar: empty scenario set");
    if (profits.size() != probs.size()) throw std::invalid_argument("cvar: size mismatch");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("cvar: alpha must lie in (0,1)");
    double psum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::invalid_argument("cvar: negative probability");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw std::invalid_argument("cvar: probabilities must sum to 1");

    const std::size_t n = profits.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return profits[a] < profits[b]; });

    // Average the worst tail of mass (1 - alpha), splitting the atom that
    // straddles the quantile.
    const double tail = 1.0 - alpha;
    double acc = 0.0, mass = 0.0, z = profits[order.back()];
    for (std::size_t k = 0; k < n; ++k) {
        const double p = probs[order[k]];
        if (p == 0.0) continue;
        const double take = std::min(p, tail - mass);
        if (take <= 0.0) break;
        acc += take * profits[order[k]];
        mass += take;
        z = profits[order[k]];
        if (mass >= tail - 1e-15) break;
    }

    RiskAssessment r;
    r.confidence = alpha;
    r.var = z;
    r.cvar = mass > 0.0 ? acc / mass : z;
    r.mean_profit = 0.0;
    for (std::size_t k = 0; k < n; ++k) r.mean_profit += probs[k] * profits[k];
    r.tail_deviations.resize(n);
    for (std::size_t k = 0; k < n; ++k) r.tail_deviations[k] = std::max(0.0, z - profits[k]);
    return r;
}

double cvar_lp(std::span<const double> profits, std::span<const double> probs, double alpha) {
    if (profits.empty()) throw std::invalid_argument("cvar_lp: empty scenario set");
    using namespace solver;
    ModelHandle m;
    m.set_objective_sense(ObjSense::maximize);
    const int z = m.add_var("z", -kInf, kInf, VarKind::continuous, 1.0);
    for (std::size_t w = 0; w < profits.size(); ++w) {
        const int rho = m.add_var("rho_" + std::to_string(w), 0.0, kInf, VarKind::continuous,
                                  -probs[w] / (1.0 - alpha));
        // z - profit <= rho
        m.add_row("dev_" + std::to_string(w), RowSense::le, profits[w], {Term{z, 1.0}, Term{rho, -1.0}});
    }
    const Solution s = solve(m);
    if (s.status != Status::optimal) throw std::runtime_error("cvar_lp: unexpected solver status");
    return s.objective;
}

PrudentialResult prudential_check(const RiskAssessment& a, double reserves) {
    PrudentialResult r;
    r.slack = a.cvar + reserves;
    r.pass = r.slack >= -1e-9 * std::max(1.0, std::abs(reserves));
    return r;
}

FinancingResult financing_check(double mean_profit, double cvar_value, const GeneratorTech& tech,
                                double capacity) {
    FinancingResult r;
    const double equity_req = tech.wacc() * tech.investment_cost * capacity;
    const double debt_req = tech.debt_rate * tech.gearing * tech.investment_cost * capacity;
    r.equity_slack = mean_profit - equity_req;
    r.debt_slack = cvar_value - debt_req;
    const double tol = 1e-9 * std::max(1.0, std::abs(equity_req) + std::abs(debt_req));
    r.equity_pass = r.equity_slack >= -tol;
    r.debt_pass = r.debt_slack >= -tol;
    return r;
}

double expected_value_premium(double expected_annual_payout_per_mw_peak, double loading) {
    if (expected_annual_payout_per_mw_peak < 0.0 || loading < 0.0)
        throw std::invalid_argument("expected_value_premium: negative input");
    return (1.0 + loading) * expected_annual_payout_per_mw_peak;
}

} // namespace eimlab
