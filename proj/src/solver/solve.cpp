#include "eimlab/solver/model.hpp"
#include "simplex.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace eimlab::solver {

namespace {

using detail::LpStatus;
using detail::Simplex;
using detail::SparseMatrix;

double pow2_round(double v) {
    if (v <= 0.0 || !std::isfinite(v)) return 1.0;
    return std::exp2(std::round(std::log2(v)));
}

struct ScaledProblem {
    SparseMatrix a;
    std::vector<double> lb, ub, cost, rhs; // structurals then slacks
    std::vector<double> row_scale, col_scale;
    bool maximize = false;
    int n = 0, m = 0;
};

// Geometric-mean equilibration with power-of-two factors so that scaling
// introduces no rounding of its own.
ScaledProblem build_scaled(const ModelHandle& model) {
    ScaledProblem p;
    p.n = model.n_vars();
    p.m = model.n_rows();
    p.maximize = model.objective_sense() == ObjSense::maximize;
    p.row_scale.assign(static_cast<std::size_t>(p.m), 1.0);
    p.col_scale.assign(static_cast<std::size_t>(p.n), 1.0);

    for (int pass = 0; pass < 2; ++pass) {
        // Rows.
        std::vector<double> mx(static_cast<std::size_t>(p.m), 0.0), mn(static_cast<std::size_t>(p.m), kInf);
        for (int r = 0; r < p.m; ++r)
            for (const auto& t : model.row_terms(r)) {
                const double v = std::abs(t.coef) * p.row_scale[static_cast<std::size_t>(r)] *
                                 p.col_scale[static_cast<std::size_t>(t.var)];
                if (v == 0.0) continue;
                mx[static_cast<std::size_t>(r)] = std::max(mx[static_cast<std::size_t>(r)], v);
                mn[static_cast<std::size_t>(r)] = std::min(mn[static_cast<std::size_t>(r)], v);
            }
        for (int r = 0; r < p.m; ++r)
            if (mx[static_cast<std::size_t>(r)] > 0.0)
                p.row_scale[static_cast<std::size_t>(r)] /=
                    pow2_round(std::sqrt(mx[static_cast<std::size_t>(r)] * mn[static_cast<std::size_t>(r)]));
        // Columns; binaries stay unscaled so integrality is exact.
        std::vector<double> cmx(static_cast<std::size_t>(p.n), 0.0), cmn(static_cast<std::size_t>(p.n), kInf);
        for (int r = 0; r < p.m; ++r)
            for (const auto& t : model.row_terms(r)) {
                const double v = std::abs(t.coef) * p.row_scale[static_cast<std::size_t>(r)] *
                                 p.col_scale[static_cast<std::size_t>(t.var)];
                if (v == 0.0) continue;
                cmx[static_cast<std::size_t>(t.var)] = std::max(cmx[static_cast<std::size_t>(t.var)], v);
                cmn[static_cast<std::size_t>(t.var)] = std::min(cmn[static_cast<std::size_t>(t.var)], v);
            }
        for (int c = 0; c < p.n; ++c) {
            if (model.kind(c) == VarKind::binary) continue;
            if (cmx[static_cast<std::size_t>(c)] > 0.0)
                p.col_scale[static_cast<std::size_t>(c)] /=
                    pow2_round(std::sqrt(cmx[static_cast<std::size_t>(c)] * cmn[static_cast<std::size_t>(c)]));
        }
    }
    for (auto& s : p.row_scale) s = std::clamp(s, 0x1p-20, 0x1p20);
    for (auto& s : p.col_scale) s = std::clamp(s, 0x1p-20, 0x1p20);

    // Column-wise matrix of the scaled structurals.
    std::vector<std::size_t> counts(static_cast<std::size_t>(p.n) + 1, 0);
    for (int r = 0; r < p.m; ++r)
        for (const auto& t : model.row_terms(r)) ++counts[static_cast<std::size_t>(t.var) + 1];
    p.a.n_rows = p.m;
    p.a.n_cols = p.n;
    p.a.col_ptr.assign(static_cast<std::size_t>(p.n) + 1, 0);
    for (int c = 0; c < p.n; ++c) p.a.col_ptr[static_cast<std::size_t>(c) + 1] = p.a.col_ptr[static_cast<std::size_t>(c)] + counts[static_cast<std::size_t>(c) + 1];
    p.a.col_row.resize(p.a.col_ptr.back());
    p.a.col_val.resize(p.a.col_ptr.back());
    std::vector<std::size_t> fill(static_cast<std::size_t>(p.n), 0);
    for (int r = 0; r < p.m; ++r)
        for (const auto& t : model.row_terms(r)) {
            const auto c = static_cast<std::size_t>(t.var);
            const auto k = p.a.col_ptr[c] + fill[c]++;
            p.a.col_row[k] = r;
            p.a.col_val[k] = t.coef * p.row_scale[static_cast<std::size_t>(r)] * p.col_scale[c];
        }

    const int ncols = p.n + p.m;
    p.lb.resize(static_cast<std::size_t>(ncols));
    p.ub.resize(static_cast<std::size_t>(ncols));
    p.cost.assign(static_cast<std::size_t>(ncols), 0.0);
    p.rhs.resize(static_cast<std::size_t>(p.m));
    const double sense = p.maximize ? -1.0 : 1.0;
    for (int c = 0; c < p.n; ++c) {
        const auto cs = static_cast<std::size_t>(c);
        // x' = x / C  =>  bounds divide, costs multiply.
        p.lb[cs] = model.lb(c) / p.col_scale[cs];
        p.ub[cs] = model.ub(c) / p.col_scale[cs];
        p.cost[cs] = sense * model.obj_coef(c) * p.col_scale[cs];
    }
    for (int r = 0; r < p.m; ++r) {
        const auto rs = static_cast<std::size_t>(r);
        p.rhs[rs] = model.row_rhs(r) * p.row_scale[rs];
        const auto sl = static_cast<std::size_t>(p.n + r);
        switch (model.row_sense(r)) {
            case RowSense::le: p.lb[sl] = 0.0; p.ub[sl] = kInf; break;
            case RowSense::ge: p.lb[sl] = -kInf; p.ub[sl] = 0.0; break;
            case RowSense::eq: p.lb[sl] = 0.0; p.ub[sl] = 0.0; break;
        }
    }
    return p;
}

Status map_status(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return Status::optimal;
        case LpStatus::infeasible: return Status::infeasible;
        case LpStatus::unbounded: return Status::unbounded;
        case LpStatus::iteration_limit: return Status::iteration_limit;
    }
    return Status::iteration_limit;
}

double original_objective(const ModelHandle& model, const std::vector<double>& x) {
    double s = 0.0;
    for (int v = 0; v < model.n_vars(); ++v) s += model.obj_coef(v) * x[static_cast<std::size_t>(v)];
    return s;
}

std::vector<double> extract_primal(const ModelHandle& model, const ScaledProblem& p, const Simplex& sx) {
    std::vector<double> x(static_cast<std::size_t>(model.n_vars()));
    for (int v = 0; v < model.n_vars(); ++v)
        x[static_cast<std::size_t>(v)] = sx.value(v) * p.col_scale[static_cast<std::size_t>(v)];
    return x;
}

// Lagrangian dual value at the returned multipliers, evaluated against the
// original (unscaled) data. Weak duality makes this a one-sided audit of the
// solve; at an optimum it matches the primal objective.
double dual_objective(const ModelHandle& model, const std::vector<double>& y,
                      const std::vector<double>& rc) {
    double v = 0.0;
    for (int r = 0; r < model.n_rows(); ++r) v += y[static_cast<std::size_t>(r)] * model.row_rhs(r);
    const bool maximize = model.objective_sense() == ObjSense::maximize;
    for (int j = 0; j < model.n_vars(); ++j) {
        const double d = rc[static_cast<std::size_t>(j)];
        if (std::abs(d) < 1e-9) continue;
        // min-sense: take the bound that minimizes d*x; flipped for max.
        const bool pick_lower = maximize ? d < 0.0 : d > 0.0;
        const double b = pick_lower ? model.lb(j) : model.ub(j);
        if (std::isinf(b)) continue; // tolerance-level dual infeasibility
        v += d * b;
    }
    return v;
}

void fill_lp_solution(const ModelHandle& model, const ScaledProblem& p, const Simplex& sx,
                      Solution& out) {
    out.primal = extract_primal(model, p, sx);
    out.objective = original_objective(model, out.primal);
    const double sense = p.maximize ? -1.0 : 1.0;
    out.duals.resize(static_cast<std::size_t>(p.m));
    for (int r = 0; r < p.m; ++r)
        out.duals[static_cast<std::size_t>(r)] =
            sense * sx.row_duals()[static_cast<std::size_t>(r)] * p.row_scale[static_cast<std::size_t>(r)];
    out.reduced_costs.resize(static_cast<std::size_t>(p.n));
    for (int j = 0; j < p.n; ++j)
        out.reduced_costs[static_cast<std::size_t>(j)] =
            sense * sx.reduced_costs()[static_cast<std::size_t>(j)] / p.col_scale[static_cast<std::size_t>(j)];
    out.dual_objective = dual_objective(model, out.duals, out.reduced_costs);
}

Solution solve_lp(const ModelHandle& model, const SolveOptions& opts) {
    ScaledProblem p = build_scaled(model);
    Simplex sx(p.a, p.lb, p.ub, p.cost, p.rhs);
    sx.set_iteration_limit(opts.iteration_limit > 0
                               ? opts.iteration_limit
                               : std::max<std::int64_t>(50000, 80ll * (p.m + p.n)));
    const LpStatus st = sx.solve_primal();
    Solution out;
    out.status = map_status(st);
    out.iterations = sx.iterations();
    out.nodes = 0;
    if (st == LpStatus::optimal) fill_lp_solution(model, p, sx, out);
    return out;
}

struct BnbNode {
    std::vector<std::pair<int, int>> fixes; // (binary var, value)
};

Solution solve_milp(const ModelHandle& model, const SolveOptions& opts) {
    ScaledProblem p = build_scaled(model);
    std::vector<int> binaries;
    for (int v = 0; v < model.n_vars(); ++v)
        if (model.kind(v) == VarKind::binary) binaries.push_back(v);

    Simplex sx(p.a, p.lb, p.ub, p.cost, p.rhs);
    const std::int64_t iter_budget = opts.iteration_limit > 0
                                         ? opts.iteration_limit
                                         : std::max<std::int64_t>(2000000, 3000ll * (p.m + p.n));
    sx.set_iteration_limit(iter_budget);
    const auto t0 = std::chrono::steady_clock::now();
    auto time_up = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >
               opts.time_limit;
    };

    Solution out;
    out.nodes = 0;
    LpStatus st = sx.solve_primal();
    if (st != LpStatus::optimal) {
        out.status = map_status(st);
        out.iterations = sx.iterations();
        return out;
    }

    // Internal comparisons run in min-sense on the original objective.
    const double sgn = p.maximize ? -1.0 : 1.0;
    auto node_value = [&] {
        double s = 0.0;
        for (int v = 0; v < model.n_vars(); ++v)
            s += model.obj_coef(v) * sx.value(v) * p.col_scale[static_cast<std::size_t>(v)];
        return sgn * s;
    };

    double incumbent_v = kInf;
    std::vector<double> incumbent_x;
    double min_open_bound = kInf; // min over bound-pruned subtrees
    bool aborted = false;

    std::vector<BnbNode> stack;
    stack.push_back({});
    const double int_tol = 1e-6;

    while (!stack.empty()) {
        if (time_up() || out.nodes > 200000) {
            aborted = true;
            break;
        }
        BnbNode node = std::move(stack.back());
        stack.pop_back();
        ++out.nodes;

        // Bounds relative to the root, then the node's fixes.
        for (int b : binaries) sx.set_bounds(b, model.lb(b), model.ub(b));
        for (const auto& [v, val] : node.fixes)
            sx.set_bounds(v, static_cast<double>(val), static_cast<double>(val));

        LpStatus ns = out.nodes == 1 ? LpStatus::optimal
                                     : sx.solve_dual(std::max<std::int64_t>(3000, 3 * p.m));
        if (ns == LpStatus::iteration_limit) {
            // Warm path stuck: cold rescue from the slack basis.
            ns = sx.solve_primal();
        }
        if (ns == LpStatus::iteration_limit) {
            aborted = true;
            break;
        }
        if (std::getenv("EIMLAB_BNB_DEBUG")) {
            std::string fx;
            for (auto& [v, val] : node.fixes) fx += std::to_string(v) + "=" + std::to_string(val) + " ";
            std::fprintf(stderr, "node %lld [%s] status=%d obj=%.6g inc=%.6g\n",
                         static_cast<long long>(out.nodes), fx.c_str(), static_cast<int>(ns),
                         ns == LpStatus::infeasible ? 0.0 : node_value(), incumbent_v);
        }
        if (ns == LpStatus::infeasible) continue;

        const double v_node = node_value();
        const double margin = opts.gap * std::max(1.0, std::abs(incumbent_v == kInf ? 0.0 : incumbent_v));
        if (v_node >= incumbent_v - margin) {
            min_open_bound = std::min(min_open_bound, v_node);
            continue;
        }

        // Fractional binary farthest from an integer; lowest index on ties.
        int branch = -1;
        double best_frac = int_tol;
        for (int b : binaries) {
            const double x = sx.value(b);
            const double dist = std::min(std::abs(x), std::abs(1.0 - x));
            if (dist > best_frac + 1e-12) {
                best_frac = dist;
                branch = b;
            }
        }

        if (branch < 0) {
            // Integer feasible. Remember the raw point, then fix every
            // binary to its rounded value and re-solve so products built on
            // them are exact; fall back to the raw point if polishing fails.
            const double v_raw = v_node;
            std::vector<double> x_raw = extract_primal(model, p, sx);
            for (int b : binaries) {
                const double r = std::round(sx.value(b));
                sx.set_bounds(b, r, r);
            }
            LpStatus ps = sx.solve_dual(std::max<std::int64_t>(3000, 3 * p.m));
            if (ps == LpStatus::iteration_limit) ps = sx.solve_primal();
            if (ps == LpStatus::iteration_limit) {
                aborted = true;
                break;
            }
            const bool polished = ps == LpStatus::optimal;
            const double v_new = polished ? node_value() : v_raw;
            if (v_new < incumbent_v - 1e-9 * std::max(1.0, std::abs(v_new))) {
                incumbent_v = v_new;
                incumbent_x = polished ? extract_primal(model, p, sx) : std::move(x_raw);
            }
            continue;
        }

        BnbNode one = node;
        one.fixes.emplace_back(branch, 1);
        BnbNode zero = std::move(node);
        zero.fixes.emplace_back(branch, 0);
        stack.push_back(std::move(one));
        stack.push_back(std::move(zero)); // popped first: zero branch leads
    }

    out.iterations = sx.iterations();
    if (incumbent_x.empty()) {
        out.status = aborted ? Status::iteration_limit : Status::infeasible;
        return out;
    }
    const double lb_v = std::min(min_open_bound, incumbent_v);
    out.gap = std::max(0.0, (incumbent_v - lb_v) / std::max(1.0, std::abs(incumbent_v)));
    out.primal = std::move(incumbent_x);
    out.objective = original_objective(model, out.primal);
    if (aborted) out.status = Status::iteration_limit;
    else out.status = out.gap <= 1e-9 ? Status::optimal : Status::gap_reached;
    return out;
}

} // namespace

Solution solve(const ModelHandle& model, const SolveOptions& opts) {
    model.validate();
    std::string backend = opts.backend;
    if (backend.empty()) {
        const char* env = std::getenv("EIMLAB_SOLVER_BACKEND");
        backend = env && *env ? env : "builtin";
    }
    if (backend != "builtin")
        throw std::runtime_error("solver backend '" + backend +
                                 "' is not available; supported backends: builtin");
    // Reversed bounds make the model trivially infeasible.
    for (int v = 0; v < model.n_vars(); ++v)
        if (model.lb(v) > model.ub(v)) {
            Solution s;
            s.status = Status::infeasible;
            return s;
        }

    Solution s = model.has_integers() ? solve_milp(model, opts) : solve_lp(model, opts);

    if (!opts.log_path.empty()) {
        std::ofstream log(opts.log_path, std::ios::app);
        log << "status=" << to_string(s.status) << " obj=" << s.objective << " iters=" << s.iterations
            << " nodes=" << s.nodes << " gap=" << s.gap << "\n";
    }
    return s;
}

} // namespace eimlab::solver
