#include "evdr/lp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace evdr::lp {

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration-limit";
        case LpStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double power_of_two(double v) { return std::exp2(std::round(std::log2(v))); }

// Product-form update of the factored basis.
struct Eta {
    int r = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
};

class Solver {
public:
    Solver(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {}

    SimplexResult run();

private:
    enum class Kind { Structural, Logical, Artificial };

    // Presolve + scaling
    bool presolve(SimplexResult& res);
    void scale();

    // Working-space column access
    [[nodiscard]] Kind kind(int j) const {
        if (j < ns_) return Kind::Structural;
        if (j < ns_ + m_) return Kind::Logical;
        return Kind::Artificial;
    }
    void scatter_column(int j, Vec& out) const;
    [[nodiscard]] double column_dot(int j, const Vec& y) const;

    bool refactor();
    void ftran(Vec& v) const;
    void btran(Vec& v) const;
    void recompute_basics();

    LpStatus iterate(const std::vector<double>& cost, bool phase1);

    const LinearProgram& lp_;
    SimplexOptions opt_;

    int m_ = 0, ns_ = 0, n_ = 0;
    std::vector<int> kept_row_, kept_col_;
    std::vector<int> row_map_;  // original row -> kept index or -1
    std::vector<double> row_scale_, col_scale_;
    SpMat a_;  // scaled, kept rows x kept columns
    Vec b_;
    std::vector<double> cost_, lower_, upper_, x_;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;

    std::vector<int> head_;  // basis position -> variable
    std::vector<int> pos_;   // variable -> basis position or -1
    mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<Eta> etas_;
    int iterations_ = 0;
};

bool Solver::presolve(SimplexResult& res) {
    const int m0 = lp_.num_rows(), n0 = lp_.num_columns();
    const SpMat a0 = lp_.matrix();
    std::vector<double> rhs = lp_.rhs();
    std::vector<int> row_count(m0, 0);

    for (int j = 0; j < n0; ++j) {
        const bool fixed = lp_.lower()[j] == lp_.upper()[j];
        if (fixed) {
            for (SpMat::InnerIterator it(a0, j); it; ++it) rhs[it.row()] -= it.value() * lp_.lower()[j];
        } else {
            kept_col_.push_back(j);
            for (SpMat::InnerIterator it(a0, j); it; ++it) ++row_count[it.row()];
        }
    }

    row_map_.assign(m0, -1);
    res.row_kept.assign(m0, 0);
    for (int i = 0; i < m0; ++i) {
        if (row_count[i] > 0) {
            row_map_[i] = static_cast<int>(kept_row_.size());
            kept_row_.push_back(i);
            res.row_kept[i] = 1;
            continue;
        }
        const double tol = 1e-9 * (1.0 + std::abs(lp_.rhs()[i]));
        double viol = 0.0;
        switch (lp_.sense()[i]) {
            case RowSense::LessEqual: viol = std::max(0.0, -rhs[i]); break;
            case RowSense::GreaterEqual: viol = std::max(0.0, rhs[i]); break;
            case RowSense::Equal: viol = std::abs(rhs[i]); break;
        }
        if (viol > tol) res.infeasibility += viol;
    }
    if (res.infeasibility > 0.0) return false;

    m_ = static_cast<int>(kept_row_.size());
    ns_ = static_cast<int>(kept_col_.size());

    std::vector<Eigen::Triplet<double>> trips;
    for (int jj = 0; jj < ns_; ++jj)
        for (SpMat::InnerIterator it(a0, kept_col_[jj]); it; ++it)
            trips.emplace_back(row_map_[it.row()], jj, it.value());
    a_.resize(m_, ns_);
    a_.setFromTriplets(trips.begin(), trips.end());
    a_.makeCompressed();

    b_.resize(m_);
    for (int i = 0; i < m_; ++i) b_[i] = rhs[kept_row_[i]];
    return true;
}

void Solver::scale() {
    row_scale_.assign(m_, 1.0);
    col_scale_.assign(ns_, 1.0);
    if (!opt_.scale || m_ == 0 || ns_ == 0) return;

    for (int pass = 0; pass < 4; ++pass) {
        std::vector<double> rmin(m_, kInf), rmax(m_, 0.0);
        for (int j = 0; j < ns_; ++j)
            for (SpMat::InnerIterator it(a_, j); it; ++it) {
                const double v = std::abs(it.value());
                rmin[it.row()] = std::min(rmin[it.row()], v);
                rmax[it.row()] = std::max(rmax[it.row()], v);
            }
        std::vector<double> rs(m_, 1.0);
        for (int i = 0; i < m_; ++i)
            if (rmax[i] > 0.0) rs[i] = power_of_two(1.0 / std::sqrt(rmin[i] * rmax[i]));
        for (int j = 0; j < ns_; ++j) {
            double cmin = kInf, cmax = 0.0;
            for (SpMat::InnerIterator it(a_, j); it; ++it) {
                it.valueRef() *= rs[it.row()];
                const double v = std::abs(it.value());
                cmin = std::min(cmin, v);
                cmax = std::max(cmax, v);
            }
            const double cs = cmax > 0.0 ? power_of_two(1.0 / std::sqrt(cmin * cmax)) : 1.0;
            for (SpMat::InnerIterator it(a_, j); it; ++it) it.valueRef() *= cs;
            col_scale_[j] *= cs;
        }
        for (int i = 0; i < m_; ++i) row_scale_[i] *= rs[i];
    }
    for (int i = 0; i < m_; ++i) b_[i] *= row_scale_[i];
}

void Solver::scatter_column(int j, Vec& out) const {
    out.setZero(m_);
    switch (kind(j)) {
        case Kind::Structural:
            for (SpMat::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
            break;
        case Kind::Logical: out[j - ns_] = 1.0; break;
        case Kind::Artificial: {
            const int k = j - ns_ - m_;
            out[art_row_[k]] = art_sign_[k];
            break;
        }
    }
}

double Solver::column_dot(int j, const Vec& y) const {
    switch (kind(j)) {
        case Kind::Structural: {
            double s = 0.0;
            for (SpMat::InnerIterator it(a_, j); it; ++it) s += it.value() * y[it.row()];
            return s;
        }
        case Kind::Logical: return y[j - ns_];
        case Kind::Artificial: {
            const int k = j - ns_ - m_;
            return art_sign_[k] * y[art_row_[k]];
        }
    }
    return 0.0;
}

bool Solver::refactor() {
    etas_.clear();
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(m_) * 3);
    for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        switch (kind(j)) {
            case Kind::Structural:
                for (SpMat::InnerIterator it(a_, j); it; ++it) trips.emplace_back(it.row(), p, it.value());
                break;
            case Kind::Logical: trips.emplace_back(j - ns_, p, 1.0); break;
            case Kind::Artificial: {
                const int k = j - ns_ - m_;
                trips.emplace_back(art_row_[k], p, art_sign_[k]);
                break;
            }
        }
    }
    SpMat basis(m_, m_);
    basis.setFromTriplets(trips.begin(), trips.end());
    basis.makeCompressed();
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    return lu_.info() == Eigen::Success;
}

void Solver::ftran(Vec& v) const {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const auto& e : etas_) {
        const double t = v[e.r] / e.pivot;
        v[e.r] = t;
        if (t != 0.0)
            for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * t;
    }
}

void Solver::btran(Vec& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double s = v[it->r];
        for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
        v[it->r] = s / it->pivot;
    }
    v = lu_.transpose().solve(v);
}

void Solver::recompute_basics() {
    Vec r = b_;
    for (int j = 0; j < n_; ++j) {
        if (pos_[j] >= 0 || x_[j] == 0.0) continue;
        switch (kind(j)) {
            case Kind::Structural:
                for (SpMat::InnerIterator it(a_, j); it; ++it) r[it.row()] -= it.value() * x_[j];
                break;
            case Kind::Logical: r[j - ns_] -= x_[j]; break;
            case Kind::Artificial: {
                const int k = j - ns_ - m_;
                r[art_row_[k]] -= art_sign_[k] * x_[j];
                break;
            }
        }
    }
    ftran(r);
    for (int p = 0; p < m_; ++p) x_[head_[p]] = r[p];
}

LpStatus Solver::iterate(const std::vector<double>& cost, bool phase1) {
    const double ptol = opt_.primal_tol, dtol = opt_.dual_tol;
    int degenerate_run = 0;
    bool bland = false;
    Vec y(m_), alpha(m_), col(m_);

    auto artificial_sum = [&] {
        double s = 0.0;
        for (int j = ns_ + m_; j < n_; ++j) s += x_[j];
        return s;
    };

    while (true) {
        if (iterations_ >= opt_.max_iterations) return LpStatus::IterationLimit;
        if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
            if (!refactor()) return LpStatus::NumericalFailure;
            recompute_basics();
        }
        if (phase1 && artificial_sum() <= ptol) return LpStatus::Optimal;

        for (int p = 0; p < m_; ++p) y[p] = cost[head_[p]];
        btran(y);

        int q = -1;
        double best = 0.0;
        double dq = 0.0;
        for (int j = 0; j < n_; ++j) {
            if (pos_[j] >= 0 || lower_[j] == upper_[j]) continue;
            const double d = cost[j] - column_dot(j, y);
            const bool at_lower = x_[j] == lower_[j];
            const bool at_upper = x_[j] == upper_[j];
            if (!((d < -dtol && !at_upper) || (d > dtol && !at_lower))) continue;
            if (bland) {
                q = j;
                dq = d;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                q = j;
                dq = d;
            }
        }

        if (q < 0) {
            if (!etas_.empty()) {
                // Confirm optimality on a fresh factorization.
                if (!refactor()) return LpStatus::NumericalFailure;
                recompute_basics();
                continue;
            }
            return LpStatus::Optimal;
        }

        scatter_column(q, col);
        alpha = col;
        ftran(alpha);

        const double dir = dq < 0.0 ? 1.0 : -1.0;
        const double flip = upper_[q] - lower_[q];  // may be inf

        int r = -1;
        double step = kInf;
        bool to_lower = false;
        if (!bland) {
            // Harris two-pass ratio test.
            double theta_max = kInf;
            for (int p = 0; p < m_; ++p) {
                const double a = alpha[p];
                if (std::abs(a) <= 1e-9) continue;
                const int j = head_[p];
                const double delta = -dir * a;
                double t = kInf;
                if (delta < 0.0 && lower_[j] > -kInf) t = (x_[j] - lower_[j] + ptol) / -delta;
                else if (delta > 0.0 && upper_[j] < kInf) t = (upper_[j] - x_[j] + ptol) / delta;
                theta_max = std::min(theta_max, t);
            }
            if (flip == kInf && theta_max == kInf) return LpStatus::Unbounded;
            if (flip <= theta_max) {
                step = flip;
            } else {
                if (theta_max == kInf) return LpStatus::Unbounded;
                double best_pivot = 0.0;
                for (int p = 0; p < m_; ++p) {
                    const double a = alpha[p];
                    if (std::abs(a) <= 1e-9) continue;
                    const int j = head_[p];
                    const double delta = -dir * a;
                    double t = kInf;
                    bool lo = false;
                    if (delta < 0.0 && lower_[j] > -kInf) {
                        t = (x_[j] - lower_[j]) / -delta;
                        lo = true;
                    } else if (delta > 0.0 && upper_[j] < kInf) {
                        t = (upper_[j] - x_[j]) / delta;
                    }
                    if (t <= theta_max && std::abs(a) > best_pivot) {
                        best_pivot = std::abs(a);
                        r = p;
                        step = std::max(0.0, t);
                        to_lower = lo;
                    }
                }
            }
        } else {
            for (int p = 0; p < m_; ++p) {
                const double a = alpha[p];
                if (std::abs(a) <= 1e-9) continue;
                const int j = head_[p];
                const double delta = -dir * a;
                double t = kInf;
                bool lo = false;
                if (delta < 0.0 && lower_[j] > -kInf) {
                    t = std::max(0.0, (x_[j] - lower_[j]) / -delta);
                    lo = true;
                } else if (delta > 0.0 && upper_[j] < kInf) {
                    t = std::max(0.0, (upper_[j] - x_[j]) / delta);
                }
                if (t < step - 1e-12 || (t <= step + 1e-12 && r >= 0 && j < head_[r])) {
                    step = t;
                    r = p;
                    to_lower = lo;
                }
            }
            if (flip <= step) {
                step = flip;
                r = -1;
            }
            if (step == kInf) return LpStatus::Unbounded;
        }

        ++iterations_;
        for (int p = 0; p < m_; ++p)
            if (alpha[p] != 0.0) x_[head_[p]] -= step * dir * alpha[p];

        if (r < 0) {
            x_[q] = dir > 0.0 ? upper_[q] : lower_[q];
        } else {
            x_[q] += dir * step;
            const int leave = head_[r];
            x_[leave] = to_lower ? lower_[leave] : upper_[leave];
            if (phase1 && kind(leave) == Kind::Artificial) upper_[leave] = 0.0;

            Eta e;
            e.r = r;
            e.pivot = alpha[r];
            for (int p = 0; p < m_; ++p)
                if (p != r && alpha[p] != 0.0) {
                    e.idx.push_back(p);
                    e.val.push_back(alpha[p]);
                }
            etas_.push_back(std::move(e));
            head_[r] = q;
            pos_[q] = r;
            pos_[leave] = -1;
        }

        if (step * std::abs(dq) <= 1e-12) {
            if (++degenerate_run > opt_.stall_limit) bland = true;
        } else {
            degenerate_run = 0;
            bland = false;
        }
    }
}

SimplexResult Solver::run() {
    SimplexResult res;
    const int m0 = lp_.num_rows(), n0 = lp_.num_columns();
    if (!presolve(res)) {
        res.status = LpStatus::Infeasible;
        return res;
    }
    scale();

    // Working variables: structurals, one logical per row, artificials.
    cost_.assign(ns_ + m_, 0.0);
    lower_.assign(ns_ + m_, 0.0);
    upper_.assign(ns_ + m_, 0.0);
    for (int jj = 0; jj < ns_; ++jj) {
        const int j = kept_col_[jj];
        const double cs = col_scale_[jj];
        cost_[jj] = lp_.cost()[j] * cs;
        lower_[jj] = lp_.lower()[j] == -kInf ? -kInf : lp_.lower()[j] / cs;
        upper_[jj] = lp_.upper()[j] == kInf ? kInf : lp_.upper()[j] / cs;
    }
    for (int i = 0; i < m_; ++i) {
        switch (lp_.sense()[kept_row_[i]]) {
            case RowSense::LessEqual: lower_[ns_ + i] = 0.0; upper_[ns_ + i] = kInf; break;
            case RowSense::GreaterEqual: lower_[ns_ + i] = -kInf; upper_[ns_ + i] = 0.0; break;
            case RowSense::Equal: lower_[ns_ + i] = 0.0; upper_[ns_ + i] = 0.0; break;
        }
    }

    x_.assign(ns_ + m_, 0.0);
    for (int jj = 0; jj < ns_; ++jj) {
        if (lower_[jj] > -kInf) x_[jj] = lower_[jj];
        else if (upper_[jj] < kInf) x_[jj] = upper_[jj];
    }
    Vec resid = b_;
    for (int jj = 0; jj < ns_; ++jj)
        if (x_[jj] != 0.0)
            for (SpMat::InnerIterator it(a_, jj); it; ++it) resid[it.row()] -= it.value() * x_[jj];

    head_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
        const int lj = ns_ + i;
        const double v = resid[i];
        if (v >= lower_[lj] && v <= upper_[lj]) {
            x_[lj] = v;
            head_[i] = lj;
            continue;
        }
        const double bound = v < lower_[lj] ? lower_[lj] : upper_[lj];
        x_[lj] = bound;
        const double rest = v - bound;
        art_row_.push_back(i);
        art_sign_.push_back(rest > 0.0 ? 1.0 : -1.0);
        cost_.push_back(0.0);
        lower_.push_back(0.0);
        upper_.push_back(kInf);
        x_.push_back(std::abs(rest));
        head_[i] = ns_ + m_ + static_cast<int>(art_row_.size()) - 1;
    }
    n_ = ns_ + m_ + static_cast<int>(art_row_.size());
    pos_.assign(n_, -1);
    for (int p = 0; p < m_; ++p) pos_[head_[p]] = p;

    if (!refactor()) {
        res.status = LpStatus::NumericalFailure;
        return res;
    }

    if (!art_row_.empty()) {
        std::vector<double> phase1_cost(n_, 0.0);
        for (int j = ns_ + m_; j < n_; ++j) phase1_cost[j] = 1.0;
        const auto st = iterate(phase1_cost, true);
        res.phase1_iterations = iterations_;
        if (st != LpStatus::Optimal) {
            res.status = st;
            res.iterations = iterations_;
            return res;
        }
        double infeas = 0.0, scaled_sum = 0.0;
        for (int k = 0; k < static_cast<int>(art_row_.size()); ++k) {
            const double v = std::max(0.0, x_[ns_ + m_ + k]);
            scaled_sum += v;
            infeas += v / row_scale_[art_row_[k]];
        }
        if (scaled_sum > 1e-7) {
            res.status = LpStatus::Infeasible;
            res.infeasibility = infeas;
            res.iterations = iterations_;
            return res;
        }
        for (int j = ns_ + m_; j < n_; ++j) {
            upper_[j] = 0.0;
            if (pos_[j] < 0) x_[j] = 0.0;
        }
    }

    std::vector<double> phase2_cost(n_, 0.0);
    std::copy(cost_.begin(), cost_.begin() + ns_, phase2_cost.begin());
    const auto st = iterate(phase2_cost, false);
    res.iterations = iterations_;
    if (st != LpStatus::Optimal) {
        res.status = st;
        return res;
    }

    // Duals of the scaled problem, then back to original units.
    Vec y(m_);
    for (int p = 0; p < m_; ++p) y[p] = phase2_cost[head_[p]];
    btran(y);
    for (int i = 0; i < m_; ++i)
        if (pos_[ns_ + i] >= 0) y[i] = 0.0;

    res.x.assign(n0, 0.0);
    for (int j = 0; j < n0; ++j)
        if (lp_.lower()[j] == lp_.upper()[j]) res.x[j] = lp_.lower()[j];
    for (int jj = 0; jj < ns_; ++jj) {
        double v = x_[jj] * col_scale_[jj];
        if (pos_[jj] < 0) {
            // Nonbasic values sit exactly on an original bound.
            const int j = kept_col_[jj];
            if (x_[jj] == lower_[jj]) v = lp_.lower()[j];
            else if (x_[jj] == upper_[jj]) v = lp_.upper()[j];
        }
        res.x[kept_col_[jj]] = v;
    }

    res.duals.assign(m0, 0.0);
    for (int i = 0; i < m_; ++i) res.duals[kept_row_[i]] = y[i] * row_scale_[i];

    const SpMat a0 = lp_.matrix();
    res.reduced_costs.assign(n0, 0.0);
    for (int j = 0; j < n0; ++j) {
        double d = lp_.cost()[j];
        for (SpMat::InnerIterator it(a0, j); it; ++it) d -= it.value() * res.duals[it.row()];
        res.reduced_costs[j] = d;
    }
    res.basis.resize(m_);
    for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        switch (kind(j)) {
            case Kind::Structural:
                res.basis[p] = kept_col_[j];
                res.reduced_costs[kept_col_[j]] = 0.0;
                break;
            case Kind::Logical: res.basis[p] = -(kept_row_[j - ns_] + 1); break;
            case Kind::Artificial: res.basis[p] = -(kept_row_[art_row_[j - ns_ - m_]] + 1); break;
        }
    }

    res.objective = lp_.objective(res.x);
    res.row_activity = lp_.row_activity(res.x);
    res.status = LpStatus::Optimal;
    return res;
}

}  // namespace

SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options) {
    lp.validate();
    Solver solver(lp, options);
    return solver.run();
}

}  // namespace evdr::lp
