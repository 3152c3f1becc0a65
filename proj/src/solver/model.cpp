#include "eimlab/solver/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace eimlab::solver {

const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::gap_reached: return "gap_reached";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

int ModelHandle::add_var(std::string name, double lb, double ub, VarKind kind, double obj_coef) {
    if (std::isnan(lb) || std::isnan(ub) || std::isnan(obj_coef))
        throw std::invalid_argument("add_var: NaN in bounds or objective for " + name);
    if (kind == VarKind::binary) {
        lb = std::max(lb, 0.0);
        ub = std::min(ub, 1.0);
        ++n_binary_;
    }
    var_name_.push_back(std::move(name));
    var_lb_.push_back(lb);
    var_ub_.push_back(ub);
    var_obj_.push_back(obj_coef);
    var_kind_.push_back(kind);
    return n_vars() - 1;
}

int ModelHandle::add_row(std::string name, RowSense sense, double rhs, std::span<const Term> terms) {
    if (std::isnan(rhs)) throw std::invalid_argument("add_row: NaN rhs in " + name);
    // Coalesce duplicate variables and drop explicit zeros.
    std::map<int, double> coefs;
    for (const auto& t : terms) {
        if (t.var < 0 || t.var >= n_vars())
            throw std::invalid_argument("add_row: undeclared variable in " + name);
        if (std::isnan(t.coef) || std::isinf(t.coef))
            throw std::invalid_argument("add_row: non-finite coefficient in " + name);
        coefs[t.var] += t.coef;
    }
    row_name_.push_back(std::move(name));
    row_sense_.push_back(sense);
    row_rhs_.push_back(rhs);
    for (const auto& [v, c] : coefs)
        if (c != 0.0) row_terms_.push_back({v, c});
    row_ptr_.push_back(row_terms_.size());
    return n_rows() - 1;
}

void ModelHandle::set_obj_coef(int var, double coef) {
    if (std::isnan(coef)) throw std::invalid_argument("set_obj_coef: NaN");
    var_obj_[static_cast<std::size_t>(var)] = coef;
}

void ModelHandle::set_bounds(int var, double lb, double ub) {
    if (std::isnan(lb) || std::isnan(ub)) throw std::invalid_argument("set_bounds: NaN");
    var_lb_[static_cast<std::size_t>(var)] = lb;
    var_ub_[static_cast<std::size_t>(var)] = ub;
}

std::span<const Term> ModelHandle::row_terms(int r) const {
    const auto a = row_ptr_[static_cast<std::size_t>(r)];
    const auto b = row_ptr_[static_cast<std::size_t>(r) + 1];
    return {row_terms_.data() + a, b - a};
}

int ModelHandle::find_var(const std::string& name) const {
    for (int v = 0; v < n_vars(); ++v)
        if (var_name_[static_cast<std::size_t>(v)] == name) return v;
    return -1;
}

int ModelHandle::count_rows_with_prefix(const std::string& prefix) const {
    int n = 0;
    for (const auto& nm : row_name_)
        if (nm.rfind(prefix, 0) == 0) ++n;
    return n;
}

void ModelHandle::validate() const {
    for (int v = 0; v < n_vars(); ++v) {
        if (std::isnan(var_lb_[static_cast<std::size_t>(v)]) || std::isnan(var_ub_[static_cast<std::size_t>(v)]))
            throw std::invalid_argument("validate: NaN bound on " + var_name_[static_cast<std::size_t>(v)]);
    }
    for (std::size_t k = 0; k < row_terms_.size(); ++k)
        if (!std::isfinite(row_terms_[k].coef))
            throw std::invalid_argument("validate: non-finite coefficient");
}

} // namespace eimlab::solver
