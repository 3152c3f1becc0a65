#pragma once

// Bounded-variable revised simplex over a dense explicit basis inverse.
// Primal (two-phase, composite phase 1) for cold solves, dual simplex for
// warm re-solves after bound changes (branch-and-bound). Deterministic:
// Dantzig pricing with lowest-index tie-breaks and a Bland fallback under
// stalling. Input is pre-scaled (powers of two) by the caller-facing layer.
//
// Intended for the model sizes this project produces (up to a few thousand
// rows); the basis inverse is O(m^2) memory and a pivot is O(m^2) work.

#include <cstdint>
#include <vector>

namespace eimlab::solver::detail {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

// Column status in the bounded simplex.
enum VStat : std::int8_t { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFree = 3 };

struct SparseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<std::size_t> col_ptr; // n_cols + 1
    std::vector<int> col_row;
    std::vector<double> col_val;
};

class Simplex {
public:
    // Matrix covers structural columns only; slack columns (one per row,
    // coefficient +1) are appended internally. Bounds/cost arrays must have
    // n_cols + n_rows entries (structurals then slacks). Cost sense: minimize.
    Simplex(const SparseMatrix& a, std::vector<double> lb, std::vector<double> ub,
            std::vector<double> cost, std::vector<double> rhs);

    // Cold solve: slack basis, composite phase 1, then phase 2.
    LpStatus solve_primal();
    // Warm re-solve after set_bounds calls; requires a prior finished solve.
    // pivot_cap < 0 means unlimited; on expiry returns iteration_limit so the
    // caller can rescue with a cold primal solve.
    LpStatus solve_dual(std::int64_t pivot_cap = -1);

    void set_bounds(int col, double lo, double hi);
    double lower(int col) const { return lb_[static_cast<std::size_t>(col)]; }
    double upper(int col) const { return ub_[static_cast<std::size_t>(col)]; }

    double objective() const;
    // Value of column j (structural or slack).
    double value(int col) const;
    // Row duals y (cost-space, y = cB' Binv) and reduced costs.
    const std::vector<double>& row_duals() const { return y_; }
    const std::vector<double>& reduced_costs() const { return d_; }
    std::int64_t iterations() const { return iters_; }
    void set_iteration_limit(std::int64_t lim) { iter_limit_ = lim; }

    // Recomputes y and d from the current basis; called after solves.
    void refresh_duals();

private:
    int m_, n_, ncols_; // rows, structurals, total columns (n_ + m_)
    SparseMatrix a_;
    std::vector<double> lb_, ub_, cost_, rhs_;

    std::vector<int> basis_;      // m_: column index of each basic position
    std::vector<std::int8_t> stat_;
    std::vector<int> bpos_;       // column -> basis position or -1
    std::vector<double> binv_;    // m_*m_, row-major
    std::vector<double> xb_;      // values of basic columns
    std::vector<double> y_, d_;

    std::int64_t iters_ = 0;
    std::int64_t iter_limit_ = -1;
    bool bland_ = false;
    std::int64_t last_progress_iter_ = 0;
    double last_obj_ = 0.0;
    std::int64_t pivots_since_refactor_ = 0;

    double nb_value(int col) const;
    void for_column(int col, auto&& fn) const; // fn(row, val)
    void ftran(int col, std::vector<double>& out) const;      // Binv * A_col
    void compute_xb();
    void compute_duals(const std::vector<double>& cb);
    void pivot_update(int enter, int leave_pos, const std::vector<double>& alpha);
    bool refactor(); // rebuild binv from basis; returns false if repaired
    void maybe_refactor(bool force = false);
    double infeasibility() const;

    LpStatus primal_loop(bool phase1);
};

} // namespace eimlab::solver::detail
