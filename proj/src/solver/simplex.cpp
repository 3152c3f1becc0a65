#include "simplex.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

namespace eimlab::solver::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-7;
constexpr double kDualTol = 1e-7;
constexpr double kPivTol = 1e-9;
constexpr double kZeroTol = 1e-12;
constexpr std::int64_t kStallLimit = 2000;
} // namespace

Simplex::Simplex(const SparseMatrix& a, std::vector<double> lb, std::vector<double> ub,
                 std::vector<double> cost, std::vector<double> rhs)
    : m_(a.n_rows), n_(a.n_cols), ncols_(a.n_cols + a.n_rows), a_(a), lb_(std::move(lb)),
      ub_(std::move(ub)), cost_(std::move(cost)), rhs_(std::move(rhs)) {
    assert(static_cast<int>(lb_.size()) == ncols_);
    assert(static_cast<int>(cost_.size()) == ncols_);
    basis_.resize(static_cast<std::size_t>(m_));
    stat_.assign(static_cast<std::size_t>(ncols_), kAtLower);
    bpos_.assign(static_cast<std::size_t>(ncols_), -1);
    binv_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_), 0.0);
    xb_.assign(static_cast<std::size_t>(m_), 0.0);
    y_.assign(static_cast<std::size_t>(m_), 0.0);
    d_.assign(static_cast<std::size_t>(ncols_), 0.0);
}

double Simplex::nb_value(int col) const {
    const auto j = static_cast<std::size_t>(col);
    switch (stat_[j]) {
        case kAtLower: return lb_[j];
        case kAtUpper: return ub_[j];
        case kFree: return 0.0;
        default: return 0.0;
    }
}

void Simplex::for_column(int col, auto&& fn) const {
    if (col < n_) {
        const auto j = static_cast<std::size_t>(col);
        for (auto k = a_.col_ptr[j]; k < a_.col_ptr[j + 1]; ++k) fn(a_.col_row[k], a_.col_val[k]);
    } else {
        fn(col - n_, 1.0);
    }
}

void Simplex::ftran(int col, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(m_), 0.0);
    if (col >= n_) {
        // Slack column: B^-1 e_r is column r of the inverse.
        const int r = col - n_;
        for (int i = 0; i < m_; ++i)
            out[static_cast<std::size_t>(i)] = binv_[static_cast<std::size_t>(i) * m_ + r];
        return;
    }
    const auto j = static_cast<std::size_t>(col);
    const auto b = a_.col_ptr[j];
    const auto e = a_.col_ptr[j + 1];
    for (int i = 0; i < m_; ++i) {
        const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
        double s = 0.0;
        for (auto k = b; k < e; ++k) s += row[a_.col_row[k]] * a_.col_val[k];
        out[static_cast<std::size_t>(i)] = s;
    }
}

void Simplex::compute_xb() {
    std::vector<double> rhs_eff = rhs_;
    for (int j = 0; j < ncols_; ++j) {
        if (stat_[static_cast<std::size_t>(j)] == kBasic) continue;
        const double v = nb_value(j);
        if (v == 0.0) continue;
        for_column(j, [&](int r, double a) { rhs_eff[static_cast<std::size_t>(r)] -= a * v; });
    }
    for (int i = 0; i < m_; ++i) {
        const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
        double s = 0.0;
        for (int k = 0; k < m_; ++k) s += row[k] * rhs_eff[static_cast<std::size_t>(k)];
        xb_[static_cast<std::size_t>(i)] = s;
    }
}

void Simplex::compute_duals(const std::vector<double>& cb) {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
        const double c = cb[static_cast<std::size_t>(i)];
        if (c == 0.0) continue;
        const double* row = binv_.data() + static_cast<std::size_t>(i) * m_;
        for (int k = 0; k < m_; ++k) y_[static_cast<std::size_t>(k)] += c * row[k];
    }
}

void Simplex::refresh_duals() {
    std::vector<double> cb(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) cb[static_cast<std::size_t>(i)] = cost_[static_cast<std::size_t>(basis_[i])];
    compute_duals(cb);
    for (int j = 0; j < ncols_; ++j) {
        if (stat_[static_cast<std::size_t>(j)] == kBasic) {
            d_[static_cast<std::size_t>(j)] = 0.0;
            continue;
        }
        double s = 0.0;
        for_column(j, [&](int r, double a) { s += y_[static_cast<std::size_t>(r)] * a; });
        d_[static_cast<std::size_t>(j)] = cost_[static_cast<std::size_t>(j)] - s;
    }
}

void Simplex::pivot_update(int enter, int leave_pos, const std::vector<double>& alpha) {
    const auto r = static_cast<std::size_t>(leave_pos);
    const double p = alpha[r];
    double* rowr = binv_.data() + r * m_;
    const double inv = 1.0 / p;
    for (int k = 0; k < m_; ++k) rowr[k] *= inv;
    for (int i = 0; i < m_; ++i) {
        if (i == leave_pos) continue;
        const double f = alpha[static_cast<std::size_t>(i)];
        if (std::abs(f) <= kZeroTol) continue;
        double* rowi = binv_.data() + static_cast<std::size_t>(i) * m_;
        for (int k = 0; k < m_; ++k) rowi[k] -= f * rowr[k];
    }
    const int leave = basis_[r];
    bpos_[static_cast<std::size_t>(leave)] = -1;
    basis_[r] = enter;
    bpos_[static_cast<std::size_t>(enter)] = leave_pos;
    stat_[static_cast<std::size_t>(enter)] = kBasic;
    ++pivots_since_refactor_;
}

bool Simplex::refactor() {
    // Dense Gauss-Jordan inversion of the basis matrix with partial
    // pivoting. On singularity the basis is reset to slacks (caller then
    // restarts phase 1); this is a rare repair path.
    const auto mm = static_cast<std::size_t>(m_);
    std::vector<double> bm(mm * mm, 0.0);
    for (int c = 0; c < m_; ++c)
        for_column(basis_[static_cast<std::size_t>(c)],
                   [&](int r, double v) { bm[static_cast<std::size_t>(r) * mm + static_cast<std::size_t>(c)] = v; });
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(i)] = 1.0;

    for (int k = 0; k < m_; ++k) {
        int piv = -1;
        double best = 1e-11;
        for (int i = k; i < m_; ++i) {
            const double v = std::abs(bm[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(k)]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (piv < 0) {
            if (std::getenv("EIMLAB_DUAL_DEBUG"))
                std::fprintf(stderr, "refactor: singular basis at k=%d, resetting to slacks\n", k);
            // Singular basis: fall back to the all-slack basis.
            std::fill(bpos_.begin(), bpos_.end(), -1);
            for (int j = 0; j < n_; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (std::isinf(lb_[js]) && std::isinf(ub_[js])) stat_[js] = kFree;
                else if (std::isinf(lb_[js])) stat_[js] = kAtUpper;
                else if (stat_[js] != kAtUpper || std::isinf(ub_[js])) stat_[js] = kAtLower;
            }
            for (int i = 0; i < m_; ++i) {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
                bpos_[static_cast<std::size_t>(n_ + i)] = i;
                stat_[static_cast<std::size_t>(n_ + i)] = kBasic;
            }
            std::fill(binv_.begin(), binv_.end(), 0.0);
            for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(i)] = 1.0;
            pivots_since_refactor_ = 0;
            compute_xb();
            return false;
        }
        if (piv != k) {
            for (int c = 0; c < m_; ++c) {
                std::swap(bm[static_cast<std::size_t>(piv) * mm + static_cast<std::size_t>(c)],
                          bm[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(c)]);
                std::swap(binv_[static_cast<std::size_t>(piv) * mm + static_cast<std::size_t>(c)],
                          binv_[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(c)]);
            }
        }
        const double invp = 1.0 / bm[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(k)];
        for (int c = 0; c < m_; ++c) {
            bm[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(c)] *= invp;
            binv_[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(c)] *= invp;
        }
        for (int i = 0; i < m_; ++i) {
            if (i == k) continue;
            const double f = bm[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(k)];
            if (std::abs(f) <= kZeroTol) continue;
            for (int c = 0; c < m_; ++c) {
                bm[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(c)] -=
                    f * bm[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(c)];
                binv_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(c)] -=
                    f * binv_[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(c)];
            }
        }
    }
    pivots_since_refactor_ = 0;
    compute_xb();
    return true;
}

void Simplex::maybe_refactor(bool force) {
    if (force || pivots_since_refactor_ >= 4096) {
        refactor();
        return;
    }
    if (pivots_since_refactor_ % 256 != 0 || pivots_since_refactor_ == 0) return;
    // Cheap drift check: residual of B xb against the effective rhs.
    std::vector<double> res = rhs_;
    for (int j = 0; j < ncols_; ++j) {
        if (stat_[static_cast<std::size_t>(j)] == kBasic) continue;
        const double v = nb_value(j);
        if (v == 0.0) continue;
        for_column(j, [&](int r, double a) { res[static_cast<std::size_t>(r)] -= a * v; });
    }
    for (int i = 0; i < m_; ++i) {
        const double v = xb_[static_cast<std::size_t>(i)];
        if (v == 0.0) continue;
        for_column(basis_[static_cast<std::size_t>(i)],
                   [&](int r, double a) { res[static_cast<std::size_t>(r)] -= a * v; });
    }
    double nrm = 0.0;
    for (double v : res) nrm = std::max(nrm, std::abs(v));
    if (nrm > 1e-6) refactor();
}

double Simplex::infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
        const auto j = static_cast<std::size_t>(basis_[i]);
        const double x = xb_[static_cast<std::size_t>(i)];
        if (x < lb_[j] - kFeasTol) s += lb_[j] - x;
        else if (x > ub_[j] + kFeasTol) s += x - ub_[j];
    }
    return s;
}

double Simplex::objective() const {
    double s = 0.0;
    for (int j = 0; j < ncols_; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (cost_[js] == 0.0) continue;
        s += cost_[js] * value(j);
    }
    return s;
}

double Simplex::value(int col) const {
    const auto j = static_cast<std::size_t>(col);
    if (stat_[j] == kBasic) return xb_[static_cast<std::size_t>(bpos_[j])];
    return nb_value(col);
}

void Simplex::set_bounds(int col, double lo, double hi) {
    const auto j = static_cast<std::size_t>(col);
    lb_[j] = lo;
    ub_[j] = hi;
    if (stat_[j] == kBasic) return;
    if (lo == hi) {
        stat_[j] = kAtLower;
        return;
    }
    // Repair the nonbasic status only when the stored reduced cost actually
    // violates dual feasibility at the new bounds.
    if (stat_[j] == kAtLower && d_[j] < -kDualTol && !std::isinf(hi)) stat_[j] = kAtUpper;
    else if (stat_[j] == kAtUpper && d_[j] > kDualTol && !std::isinf(lo)) stat_[j] = kAtLower;
    else if (stat_[j] == kAtLower && std::isinf(lo)) stat_[j] = !std::isinf(hi) ? kAtUpper : kFree;
    else if (stat_[j] == kAtUpper && std::isinf(hi)) stat_[j] = !std::isinf(lo) ? kAtLower : kFree;
}

LpStatus Simplex::solve_primal() {
    // Cold start: all-slack basis, structurals at the bound nearest zero.
    const auto mm = static_cast<std::size_t>(m_);
    std::fill(bpos_.begin(), bpos_.end(), -1);
    for (int j = 0; j < n_; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (std::isinf(lb_[js]) && std::isinf(ub_[js])) stat_[js] = kFree;
        else if (std::isinf(lb_[js])) stat_[js] = kAtUpper;
        else if (std::isinf(ub_[js])) stat_[js] = kAtLower;
        else stat_[js] = (std::abs(lb_[js]) <= std::abs(ub_[js])) ? kAtLower : kAtUpper;
    }
    for (int i = 0; i < m_; ++i) {
        basis_[static_cast<std::size_t>(i)] = n_ + i;
        bpos_[static_cast<std::size_t>(n_ + i)] = i;
        stat_[static_cast<std::size_t>(n_ + i)] = kBasic;
    }
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(i)] = 1.0;
    pivots_since_refactor_ = 0;
    bland_ = false;
    compute_xb();

    if (infeasibility() > kFeasTol) {
        const LpStatus st = primal_loop(true);
        if (st != LpStatus::optimal) {
            if (std::getenv("EIMLAB_DUAL_DEBUG"))
                std::fprintf(stderr, "phase1 exit st=%d infeas=%.6g\n", (int)st, infeasibility());
            return st == LpStatus::unbounded ? LpStatus::infeasible : st;
        }
        if (infeasibility() > 1e-5) {
            if (std::getenv("EIMLAB_DUAL_DEBUG"))
                std::fprintf(stderr, "post-phase1 residual infeas=%.6g\n", infeasibility());
            return LpStatus::infeasible;
        }
    }
    bland_ = false;
    const LpStatus st = primal_loop(false);
    if (st == LpStatus::optimal) {
        maybe_refactor(true);
        refresh_duals();
    }
    return st;
}

// One primal simplex run. phase1 minimizes total bound infeasibility of the
// basic variables; phase 2 minimizes the true cost with feasibility kept.
LpStatus Simplex::primal_loop(bool phase1) {
    std::vector<double> cb(static_cast<std::size_t>(m_));
    std::vector<double> alpha;
    std::vector<char> banned(static_cast<std::size_t>(ncols_), 0);
    int escalations = 0;
    last_progress_iter_ = iters_;
    last_obj_ = kInf;

    while (true) {
        if (iter_limit_ >= 0 && iters_ >= iter_limit_) return LpStatus::iteration_limit;
        ++iters_;
        maybe_refactor();

        bool any_infeas = false;
        for (int i = 0; i < m_; ++i) {
            const auto bj = static_cast<std::size_t>(basis_[i]);
            const double x = xb_[static_cast<std::size_t>(i)];
            double c = 0.0;
            if (phase1) {
                if (x < lb_[bj] - kFeasTol) {
                    c = -1.0;
                    any_infeas = true;
                } else if (x > ub_[bj] + kFeasTol) {
                    c = 1.0;
                    any_infeas = true;
                }
            } else {
                c = cost_[bj];
            }
            cb[static_cast<std::size_t>(i)] = c;
        }
        if (phase1 && !any_infeas) return LpStatus::optimal;

        compute_duals(cb);

        // Pricing (Dantzig; Bland under stall).
        int enter = -1;
        double best = kDualTol;
        int dir = 0;
        for (int j = 0; j < ncols_; ++j) {
            const auto js = static_cast<std::size_t>(j);
            if (stat_[js] == kBasic) continue;
            if (banned[js]) continue;
            if (ub_[js] - lb_[js] < kZeroTol && !std::isinf(lb_[js])) continue; // fixed
            double dj;
            if (phase1) {
                double s = 0.0;
                for_column(j, [&](int r, double a) { s += y_[static_cast<std::size_t>(r)] * a; });
                dj = -s;
            } else {
                double s = 0.0;
                for_column(j, [&](int r, double a) { s += y_[static_cast<std::size_t>(r)] * a; });
                dj = cost_[js] - s;
            }
            d_[js] = dj;
            int cand_dir = 0;
            if (stat_[js] == kAtLower && dj < -kDualTol) cand_dir = 1;
            else if (stat_[js] == kAtUpper && dj > kDualTol) cand_dir = -1;
            else if (stat_[js] == kFree && std::abs(dj) > kDualTol) cand_dir = dj < 0 ? 1 : -1;
            if (cand_dir == 0) continue;
            if (bland_) {
                enter = j;
                dir = cand_dir;
                break;
            }
            if (std::abs(dj) > best) {
                best = std::abs(dj);
                enter = j;
                dir = cand_dir;
            }
        }
        if (enter < 0) {
            // Conclude only against a fresh factorization, then retry the
            // pricing with a much smaller tolerance before giving up: a
            // genuine descent direction may price out barely below kDualTol.
            if (pivots_since_refactor_ > 0) {
                refactor();
                continue;
            }
            if (phase1) {
                if (++escalations > 10) return LpStatus::infeasible;
                double best = 1e-11;
                for (int j = 0; j < ncols_; ++j) {
                    const auto js = static_cast<std::size_t>(j);
                    if (stat_[js] == kBasic || banned[js]) continue;
                    if (ub_[js] - lb_[js] < kZeroTol && !std::isinf(lb_[js])) continue;
                    const double dj = d_[js];
                    int cand = 0;
                    if (stat_[js] == kAtLower && dj < -best) cand = 1;
                    else if (stat_[js] == kAtUpper && dj > best) cand = -1;
                    else if (stat_[js] == kFree && std::abs(dj) > best) cand = dj < 0 ? 1 : -1;
                    if (cand != 0) {
                        best = std::abs(dj);
                        enter = j;
                        dir = cand;
                    }
                }
                if (enter < 0) return LpStatus::infeasible;
            } else {
                return LpStatus::optimal;
            }
        }

        ftran(enter, alpha);
        const double sigma = static_cast<double>(dir);

        // Ratio test over basic breakpoints plus the entering bound flip.
        const auto ej = static_cast<std::size_t>(enter);
        double theta = kInf;
        bool flip_possible = !std::isinf(lb_[ej]) && !std::isinf(ub_[ej]);
        const double flip_theta = flip_possible ? ub_[ej] - lb_[ej] : kInf;
        int leave_pos = -1;
        std::int8_t leave_stat = kAtLower;
        double leave_alpha = 0.0;

        for (int i = 0; i < m_; ++i) {
            const double a = alpha[static_cast<std::size_t>(i)];
            if (std::abs(a) <= kPivTol) continue;
            const double rate = -sigma * a;
            const auto bj = static_cast<std::size_t>(basis_[i]);
            const double x = xb_[static_cast<std::size_t>(i)];
            double ti = kInf;
            std::int8_t ts = kAtLower;
            if (phase1 && x < lb_[bj] - kFeasTol) {
                if (rate > 0.0) {
                    ti = (lb_[bj] - x) / rate;
                    ts = kAtLower;
                }
            } else if (phase1 && x > ub_[bj] + kFeasTol) {
                if (rate < 0.0) {
                    ti = (ub_[bj] - x) / rate;
                    ts = kAtUpper;
                }
            } else {
                if (rate > 0.0 && !std::isinf(ub_[bj])) {
                    ti = (ub_[bj] - x) / rate;
                    ts = kAtUpper;
                } else if (rate < 0.0 && !std::isinf(lb_[bj])) {
                    ti = (lb_[bj] - x) / rate;
                    ts = kAtLower;
                }
            }
            if (ti == kInf) continue;
            ti = std::max(ti, 0.0);
            const bool better =
                ti < theta - 1e-10 ||
                (ti < theta + 1e-10 &&
                 (leave_pos < 0 ||
                  (!bland_ && std::abs(a) > std::abs(leave_alpha) + kZeroTol) ||
                  (bland_ && basis_[i] < basis_[leave_pos])));
            if (better) {
                theta = ti;
                leave_pos = i;
                leave_stat = ts;
                leave_alpha = a;
            }
        }

        if (flip_theta < theta) {
            // Entering variable crosses to its other bound; no basis change.
            for (int i = 0; i < m_; ++i)
                xb_[static_cast<std::size_t>(i)] -= sigma * flip_theta * alpha[static_cast<std::size_t>(i)];
            stat_[ej] = stat_[ej] == kAtLower ? kAtUpper : kAtLower;
            std::fill(banned.begin(), banned.end(), 0);
            continue;
        }
        if (leave_pos < 0) {
            // Conclude only against a fresh factorization; and treat a
            // tolerance-level entering candidate without any breakpoint as
            // noise (ban it and re-price) rather than a certificate.
            if (pivots_since_refactor_ > 0) {
                refactor();
                continue;
            }
            if (std::abs(d_[static_cast<std::size_t>(enter)]) <= 1e-4) {
                banned[static_cast<std::size_t>(enter)] = 1;
                continue;
            }
            if (std::getenv("EIMLAB_DUAL_DEBUG"))
                std::fprintf(stderr, "no-breakpoint conclusion: phase1=%d enter=%d d=%.6g infeas=%.6g\n",
                             (int)phase1, enter, d_[static_cast<std::size_t>(enter)], infeasibility());
            if (phase1) return LpStatus::infeasible;
            return LpStatus::unbounded;
        }

        theta = std::max(theta, 0.0);
        for (int i = 0; i < m_; ++i) xb_[static_cast<std::size_t>(i)] -= sigma * theta * alpha[static_cast<std::size_t>(i)];
        const double enter_val = nb_value(enter) + sigma * theta;
        stat_[static_cast<std::size_t>(basis_[leave_pos])] = leave_stat;
        pivot_update(enter, leave_pos, alpha);
        xb_[static_cast<std::size_t>(leave_pos)] = enter_val;
        std::fill(banned.begin(), banned.end(), 0);

        // Stall detection drives the Bland fallback.
        const double obj = phase1 ? infeasibility() : 0.0;
        if (phase1) {
            if (obj < last_obj_ - 1e-10) {
                last_obj_ = obj;
                last_progress_iter_ = iters_;
            }
        } else if (theta > 1e-10) {
            last_progress_iter_ = iters_;
        }
        if (!bland_ && iters_ - last_progress_iter_ > kStallLimit) bland_ = true;
    }
}

LpStatus Simplex::solve_dual(std::int64_t pivot_cap) {
    compute_xb();
    std::vector<double> alpha_row(static_cast<std::size_t>(ncols_));
    std::vector<double> alpha;
    std::int64_t pivots = 0;
    int escalations = 0;

    while (true) {
        if (iter_limit_ >= 0 && iters_ >= iter_limit_) return LpStatus::iteration_limit;
        if (pivot_cap >= 0 && pivots++ > pivot_cap) return LpStatus::iteration_limit;
        ++iters_;
        const std::int64_t before = pivots_since_refactor_;
        maybe_refactor();
        // A refactor invalidates the incrementally maintained reduced costs.
        if (pivots_since_refactor_ < before) refresh_duals();

        // Leaving: most primal-infeasible basic.
        int rpos = -1;
        double worst = kFeasTol;
        int dirn = 0; // +1: must increase (below lower), -1: must decrease
        for (int i = 0; i < m_; ++i) {
            const auto bj = static_cast<std::size_t>(basis_[i]);
            const double x = xb_[static_cast<std::size_t>(i)];
            if (lb_[bj] - x > worst) {
                worst = lb_[bj] - x;
                rpos = i;
                dirn = 1;
            }
            if (x - ub_[bj] > worst) {
                worst = x - ub_[bj];
                rpos = i;
                dirn = -1;
            }
        }
        if (rpos < 0) {
            maybe_refactor(true);
            refresh_duals();
            // Primal feasibility certified against the clean factorization;
            // optimality additionally needs dual feasibility of the true
            // reduced costs (the incremental updates drift), else finish
            // with primal simplex from this feasible basis.
            bool primal_ok = true;
            for (int i = 0; i < m_; ++i) {
                const auto bj = static_cast<std::size_t>(basis_[i]);
                const double x = xb_[static_cast<std::size_t>(i)];
                if (x < lb_[bj] - 1e-6 || x > ub_[bj] + 1e-6) primal_ok = false;
            }
            if (!primal_ok) continue;
            bool dual_ok = true;
            for (int j = 0; j < ncols_ && dual_ok; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (stat_[js] == kBasic) continue;
                if (ub_[js] - lb_[js] < kZeroTol && !std::isinf(lb_[js])) continue;
                if (stat_[js] == kAtLower && d_[js] < -1e-6) dual_ok = false;
                if (stat_[js] == kAtUpper && d_[js] > 1e-6) dual_ok = false;
                if (stat_[js] == kFree && std::abs(d_[js]) > 1e-6) dual_ok = false;
            }
            if (dual_ok) return LpStatus::optimal;
            bland_ = false;
            const LpStatus st = primal_loop(false);
            if (st == LpStatus::optimal) {
                maybe_refactor(true);
                refresh_duals();
            }
            return st;
        }

        // Row rpos of B^-1 A for all nonbasic columns.
        const double* rho = binv_.data() + static_cast<std::size_t>(rpos) * m_;
        int enter = -1;
        double best_ratio = kInf;
        double best_alpha = 0.0;
        for (int j = 0; j < ncols_; ++j) {
            const auto js = static_cast<std::size_t>(j);
            if (stat_[js] == kBasic) continue;
            double arj = 0.0;
            for_column(j, [&](int r, double a) { arj += rho[r] * a; });
            alpha_row[js] = arj;
            if (std::abs(arj) <= kPivTol) continue;
            const bool fixed = ub_[js] - lb_[js] < kZeroTol && !std::isinf(lb_[js]);
            if (fixed) continue;
            bool ok;
            if (dirn > 0)
                ok = (stat_[js] == kAtLower && arj < 0.0) || (stat_[js] == kAtUpper && arj > 0.0) || stat_[js] == kFree;
            else
                ok = (stat_[js] == kAtLower && arj > 0.0) || (stat_[js] == kAtUpper && arj < 0.0) || stat_[js] == kFree;
            if (!ok) continue;
            const double ratio = std::abs(d_[js]) / std::abs(arj);
            if (ratio < best_ratio - 1e-10 ||
                (ratio < best_ratio + 1e-10 && (enter < 0 || std::abs(arj) > std::abs(best_alpha) + kZeroTol))) {
                best_ratio = ratio;
                enter = j;
                best_alpha = arj;
            }
        }
        if (enter < 0) {
            // Certify infeasibility only against a fresh factorization; a
            // stale inverse can make eligible columns vanish.
            if (pivots_since_refactor_ > 0) {
                refactor();
                refresh_duals();
                continue;
            }
            // Tolerance escalation: a candidate with a tiny but genuine
            // pivot element must block the certificate. Bounded per call;
            // persistent trouble is handed back as iteration_limit.
            if (++escalations > 30) return LpStatus::iteration_limit;
            for (int j = 0; j < ncols_; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (stat_[js] == kBasic) continue;
                const double arj = alpha_row[js];
                if (std::abs(arj) <= 1e-12 || std::abs(arj) > kPivTol) continue;
                const bool fixed = ub_[js] - lb_[js] < kZeroTol && !std::isinf(lb_[js]);
                if (fixed) continue;
                bool ok;
                if (dirn > 0)
                    ok = (stat_[js] == kAtLower && arj < 0.0) || (stat_[js] == kAtUpper && arj > 0.0) ||
                         stat_[js] == kFree;
                else
                    ok = (stat_[js] == kAtLower && arj > 0.0) || (stat_[js] == kAtUpper && arj < 0.0) ||
                         stat_[js] == kFree;
                if (!ok) continue;
                if (enter < 0 || std::abs(arj) > std::abs(best_alpha))
                    { enter = j; best_alpha = arj; }
            }
            if (enter < 0) return LpStatus::infeasible;
        }

        const auto rj = static_cast<std::size_t>(basis_[rpos]);
        const double target = dirn > 0 ? lb_[rj] : ub_[rj];
        const double arj = alpha_row[static_cast<std::size_t>(enter)];
        const double dx = (xb_[static_cast<std::size_t>(rpos)] - target) / arj;

        ftran(enter, alpha);
        for (int i = 0; i < m_; ++i) xb_[static_cast<std::size_t>(i)] -= dx * alpha[static_cast<std::size_t>(i)];
        const double enter_val = nb_value(enter) + dx;

        // Dual update: d stays dual-feasible by choice of the min ratio.
        const double tau = d_[static_cast<std::size_t>(enter)] / arj;
        if (tau != 0.0) {
            for (int j = 0; j < ncols_; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (stat_[js] == kBasic || j == enter) continue;
                d_[js] -= tau * alpha_row[js];
            }
        }
        stat_[rj] = dirn > 0 ? kAtLower : kAtUpper;
        d_[rj] = -tau;
        d_[static_cast<std::size_t>(enter)] = 0.0;
        pivot_update(enter, rpos, alpha);
        xb_[static_cast<std::size_t>(rpos)] = enter_val;
    }
}

} // namespace eimlab::solver::detail
