#pragma once

// Backend-agnostic mathematical-programming layer. Models are built once,
// validated, then handed to a backend selected at runtime (environment
// variable EIMLAB_SOLVER_BACKEND or SolveOptions::backend; "builtin" is the
// bundled bounded-variable simplex + branch-and-bound and is always
// available).
//
// Dual convention, used everywhere downstream: row duals y satisfy
// y_i = d(objective)/d(rhs_i) in the model's own objective sense. For a
// minimization, a binding >= row has y >= 0 and a binding <= row has y <= 0;
// for a maximization the signs flip, so <= constraints yield non-negative
// multipliers. Variable-bound multipliers are recovered from reduced costs
// d_j = c_j - y'A_j: at a lower bound mu_lo = d_j (min) resp. -d_j (max), at
// an upper bound mu_up = -d_j (min) resp. d_j (max); all are non-negative at
// an optimum. A fixture test pins this convention.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace eimlab::solver {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };
enum class RowSense { le, ge, eq };
enum class ObjSense { minimize, maximize };

enum class Status { optimal, gap_reached, infeasible, unbounded, iteration_limit };

const char* to_string(Status s);

struct Term {
    int var;
    double coef;
};

class ModelHandle {
public:
    int add_var(std::string name, double lb, double ub, VarKind kind = VarKind::continuous,
                double obj_coef = 0.0);
    int add_row(std::string name, RowSense sense, double rhs, std::span<const Term> terms);
    int add_row(std::string name, RowSense sense, double rhs, std::initializer_list<Term> terms) {
        return add_row(std::move(name), sense, rhs, std::span<const Term>(terms.begin(), terms.size()));
    }

    void set_objective_sense(ObjSense s) { obj_sense_ = s; }
    void set_obj_coef(int var, double coef);
    void set_bounds(int var, double lb, double ub);

    ObjSense objective_sense() const { return obj_sense_; }
    int n_vars() const { return static_cast<int>(var_lb_.size()); }
    int n_rows() const { return static_cast<int>(row_rhs_.size()); }
    bool has_integers() const { return n_binary_ > 0; }

    double lb(int v) const { return var_lb_[static_cast<std::size_t>(v)]; }
    double ub(int v) const { return var_ub_[static_cast<std::size_t>(v)]; }
    VarKind kind(int v) const { return var_kind_[static_cast<std::size_t>(v)]; }
    double obj_coef(int v) const { return var_obj_[static_cast<std::size_t>(v)]; }
    const std::string& var_name(int v) const { return var_name_[static_cast<std::size_t>(v)]; }
    const std::string& row_name(int r) const { return row_name_[static_cast<std::size_t>(r)]; }
    RowSense row_sense(int r) const { return row_sense_[static_cast<std::size_t>(r)]; }
    double row_rhs(int r) const { return row_rhs_[static_cast<std::size_t>(r)]; }
    std::span<const Term> row_terms(int r) const;

    int find_var(const std::string& name) const;  // -1 if absent
    int count_rows_with_prefix(const std::string& prefix) const;

    // Throws std::invalid_argument on structural defects (NaN coefficients,
    // reversed bounds on declared variables are reported at solve time as
    // infeasible instead).
    void validate() const;

private:
    ObjSense obj_sense_ = ObjSense::minimize;
    std::vector<double> var_lb_, var_ub_, var_obj_;
    std::vector<VarKind> var_kind_;
    std::vector<std::string> var_name_;
    int n_binary_ = 0;

    std::vector<std::string> row_name_;
    std::vector<RowSense> row_sense_;
    std::vector<double> row_rhs_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<Term> row_terms_;
};

struct Solution {
    Status status = Status::iteration_limit;
    std::vector<double> primal;        // by variable
    std::vector<double> duals;         // by row; empty for MILPs
    std::vector<double> reduced_costs; // by variable; empty for MILPs
    double objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN(); // LP only
    double gap = 0.0;                  // relative MILP gap at termination
    std::int64_t iterations = 0;       // simplex iterations, all nodes
    std::int64_t nodes = 0;            // branch-and-bound nodes solved

    bool has_duals() const { return !duals.empty(); }
    bool feasible() const { return status == Status::optimal || status == Status::gap_reached; }
};

struct SolveOptions {
    double gap = 1e-4;          // relative MILP termination gap
    double time_limit = 1e30;   // seconds
    std::int64_t iteration_limit = -1; // simplex iterations; -1 = automatic
    std::string backend;        // empty: EIMLAB_SOLVER_BACKEND or "builtin"
    std::string log_path;       // per-run solver log, empty = no log
};

// Solves an LP or MILP. Throws std::runtime_error naming the backend if the
// requested backend is not available; never coerces infeasible/unbounded
// outcomes into numbers.
Solution solve(const ModelHandle& model, const SolveOptions& opts = {});

// Text export/import for cross-solver debugging. Deterministic output.
void write_mps(const ModelHandle& model, const std::string& path);
void write_lp(const ModelHandle& model, const std::string& path);
// Reference reader: reconstructs a model from free-format MPS as written by
// write_mps. Used by round-trip tests.
ModelHandle read_mps(const std::string& path);

} // namespace eimlab::solver
