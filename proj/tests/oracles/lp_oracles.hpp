#pragma once

// Independent reference solvers used only by the tests. They share nothing
// with the production simplex beyond the LinearProgram container.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "evdr/lp/linear_program.hpp"

namespace oracle {

using evdr::lp::LinearProgram;
using evdr::lp::RowSense;

/// Minimum objective over all basic feasible points, or nullopt if none is
/// feasible. Requires finite bounds on every column.
///
/// A vertex is fixed by n independent active constraints. Each non-fixed
/// column is either free or at one of its bounds, and the free columns are
/// solved from the (independent) equality rows plus an equally sized subset
/// of inequality rows taken as active. Every such system is tried.
inline std::optional<double> vertex_enumeration(const LinearProgram& lp) {
    const int n = lp.num_columns();
    const Eigen::MatrixXd a = Eigen::MatrixXd(lp.matrix());
    const auto& lo = lp.lower();
    const auto& up = lp.upper();
    for (int j = 0; j < n; ++j)
        if (!std::isfinite(lo[j]) || !std::isfinite(up[j])) return std::nullopt;

    // Rows as a x <= b or a x = b.
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    std::vector<bool> is_eq;
    for (int i = 0; i < lp.num_rows(); ++i) {
        Eigen::VectorXd r = a.row(i).transpose();
        double b = lp.rhs()[i];
        if (lp.sense()[i] == RowSense::GreaterEqual) {
            r = -r;
            b = -b;
        }
        rows.push_back(r);
        rhs.push_back(b);
        is_eq.push_back(lp.sense()[i] == RowSense::Equal);
    }

    auto feasible = [&](const Eigen::VectorXd& x) {
        for (int j = 0; j < n; ++j)
            if (x[j] < lo[j] - 1e-7 || x[j] > up[j] + 1e-7) return false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double act = rows[i].dot(x);
            const double slack = 1e-7 * (1.0 + std::abs(rhs[i]));
            if (is_eq[i] ? std::abs(act - rhs[i]) > slack : act - rhs[i] > slack) return false;
        }
        return true;
    };

    // Keep a maximal independent subset of the equality rows.
    std::vector<int> eq, ineq;
    Eigen::MatrixXd kept(0, n);
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
        if (!is_eq[i]) {
            if (rows[i].cwiseAbs().maxCoeff() > 0.0) ineq.push_back(i);
            continue;
        }
        Eigen::MatrixXd trial(kept.rows() + 1, n);
        trial << kept, rows[i].transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
        lu.setThreshold(1e-10);
        if (lu.rank() > kept.rows()) {
            kept = trial;
            eq.push_back(i);
        }
    }

    std::vector<int> movable;
    Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        if (lo[j] == up[j]) base[j] = lo[j];
        else movable.push_back(j);
    }
    const int nm = static_cast<int>(movable.size());
    const int ne = static_cast<int>(eq.size());
    const int ni = static_cast<int>(ineq.size());

    std::optional<double> best;
    auto consider = [&](const Eigen::VectorXd& x) {
        if (!feasible(x)) return;
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += lp.cost()[j] * x[j];
        if (!best || obj < *best) best = obj;
    };

    // state[t]: 0 free, 1 at lower, 2 at upper, for movable column t.
    std::vector<int> state(nm, 0);
    for (;;) {
        std::vector<int> free_cols;
        Eigen::VectorXd x = base;
        for (int t = 0; t < nm; ++t) {
            const int j = movable[t];
            if (state[t] == 0) free_cols.push_back(j);
            else x[j] = state[t] == 1 ? lo[j] : up[j];
        }
        const int nf = static_cast<int>(free_cols.size());
        const int need = nf - ne;
        if (nf == 0) {
            if (ne == 0) consider(x);
        } else if (need >= 0 && need <= ni) {
            std::vector<int> pick(need);
            for (int i = 0; i < need; ++i) pick[i] = i;
            for (;;) {
                Eigen::MatrixXd m(nf, nf);
                Eigen::VectorXd r(nf);
                for (int q = 0; q < nf; ++q) {
                    const int row = q < ne ? eq[q] : ineq[pick[q - ne]];
                    double b = rhs[row];
                    for (int j = 0; j < n; ++j) b -= rows[row][j] * x[j];
                    for (int c = 0; c < nf; ++c) {
                        m(q, c) = rows[row][free_cols[c]];
                        b += rows[row][free_cols[c]] * x[free_cols[c]];
                    }
                    r[q] = b;
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
                lu.setThreshold(1e-10);
                if (lu.rank() == nf) {
                    const Eigen::VectorXd z = lu.solve(r);
                    Eigen::VectorXd y = x;
                    for (int c = 0; c < nf; ++c) y[free_cols[c]] = z[c];
                    consider(y);
                }
                int i = need - 1;
                while (i >= 0 && pick[i] == ni - need + i) --i;
                if (i < 0) break;
                ++pick[i];
                for (int t = i + 1; t < need; ++t) pick[t] = pick[t - 1] + 1;
            }
        }
        int t = 0;
        while (t < nm && state[t] == 2) state[t++] = 0;
        if (t == nm) break;
        ++state[t];
    }
    return best;
}

/// Dense two-phase tableau simplex with Bland's rule on the standard-form
/// transformation. Returns nullopt when infeasible. Bounds must be finite on
/// at least one side.
inline std::optional<double> dense_bland(const LinearProgram& lp) {
    const int n = lp.num_columns();
    const Eigen::MatrixXd a0 = Eigen::MatrixXd(lp.matrix());
    // Substitute x = l + z (finite lower) or x = u - z (finite upper only).
    std::vector<double> shift(n, 0.0), sign(n, 1.0);
    for (int j = 0; j < n; ++j) {
        if (lp.lower()[j] > -evdr::lp::kInf) shift[j] = lp.lower()[j];
        else {
            shift[j] = lp.upper()[j];
            sign[j] = -1.0;
        }
    }
    struct Row {
        std::vector<double> a;
        double b;
        int slack;  // +1 for <=, -1 for >=, 0 for =
    };
    std::vector<Row> rows;
    for (int i = 0; i < lp.num_rows(); ++i) {
        Row r{std::vector<double>(n), lp.rhs()[i], 0};
        for (int j = 0; j < n; ++j) {
            r.a[j] = a0(i, j) * sign[j];
            r.b -= a0(i, j) * shift[j];
        }
        r.slack = lp.sense()[i] == RowSense::LessEqual ? 1 : lp.sense()[i] == RowSense::GreaterEqual ? -1 : 0;
        rows.push_back(r);
    }
    for (int j = 0; j < n; ++j) {
        const double width = lp.upper()[j] - lp.lower()[j];
        if (std::isfinite(width)) {
            Row r{std::vector<double>(n, 0.0), width, 1};
            r.a[j] = 1.0;
            rows.push_back(r);
        }
    }
    const int m = static_cast<int>(rows.size());
    int slacks = 0;
    for (const auto& r : rows) slacks += r.slack != 0;
    const int cols = n + slacks + m;  // structurals, slacks, artificials
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, cols + 1);
    std::vector<int> basis(m);
    int s = n;
    for (int i = 0; i < m; ++i) {
        double flip = rows[i].b < 0 ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) t(i, j) = flip * rows[i].a[j];
        if (rows[i].slack != 0) t(i, s++) = flip * rows[i].slack;
        t(i, n + slacks + i) = 1.0;
        t(i, cols) = flip * rows[i].b;
        basis[i] = n + slacks + i;
    }

    auto run = [&](const Eigen::VectorXd& c, int allowed) -> bool {
        for (int iter = 0; iter < 100000; ++iter) {
            int q = -1;
            for (int j = 0; j < allowed; ++j) {
                double d = c[j];
                for (int i = 0; i < m; ++i) d -= c[basis[i]] * t(i, j);
                if (d < -1e-10) {
                    q = j;
                    break;
                }
            }
            if (q < 0) return true;
            int r = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (t(i, q) <= 1e-11) continue;
                const double ratio = t(i, cols) / t(i, q);
                if (ratio < best - 1e-12 || (ratio <= best + 1e-12 && r >= 0 && basis[i] < basis[r])) {
                    best = ratio;
                    r = i;
                }
            }
            if (r < 0) return false;  // unbounded
            t.row(r) /= t(r, q);
            for (int i = 0; i < m; ++i)
                if (i != r && t(i, q) != 0.0) t.row(i) -= t(i, q) * t.row(r);
            basis[r] = q;
        }
        return false;
    };

    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(cols);
    for (int i = 0; i < m; ++i) c1[n + slacks + i] = 1.0;
    run(c1, cols);
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n + slacks) infeas += t(i, cols);
    if (infeas > 1e-7) return std::nullopt;
    // Drive zero-valued artificials out where possible.
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n + slacks) continue;
        for (int j = 0; j < n + slacks; ++j) {
            if (std::abs(t(i, j)) > 1e-9) {
                t.row(i) /= t(i, j);
                for (int k = 0; k < m; ++k)
                    if (k != i && t(k, j) != 0.0) t.row(k) -= t(k, j) * t.row(i);
                basis[i] = j;
                break;
            }
        }
    }
    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(cols);
    for (int j = 0; j < n; ++j) c2[j] = lp.cost()[j] * sign[j];
    if (!run(c2, n + slacks)) return std::nullopt;
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.cost()[j] * shift[j];
    for (int i = 0; i < m; ++i) obj += c2[basis[i]] * t(i, cols);
    return obj;
}

/// Reduced costs c - A^T y from a dense solve of B^T y = c_B for the given
/// basis (column index, or -(row + 1) for a row's unit column). Rows that are
/// not kept get y = 0 and are skipped.
inline std::vector<double> basis_reduced_costs(const LinearProgram& lp, const std::vector<int>& basis,
                                               const std::vector<char>& row_kept) {
    const Eigen::MatrixXd a = Eigen::MatrixXd(lp.matrix());
    std::vector<int> rows;
    for (int i = 0; i < lp.num_rows(); ++i)
        if (row_kept[i]) rows.push_back(i);
    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd cb = Eigen::VectorXd::Zero(m);
    for (int p = 0; p < m; ++p) {
        const int j = basis[p];
        if (j >= 0) {
            for (int r = 0; r < m; ++r) b(r, p) = a(rows[r], j);
            cb[p] = lp.cost()[j];
        } else {
            const int row = -j - 1;
            for (int r = 0; r < m; ++r)
                if (rows[r] == row) b(r, p) = 1.0;
        }
    }
    const Eigen::VectorXd yk = b.transpose().fullPivLu().solve(cb);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(lp.num_rows());
    for (int r = 0; r < m; ++r) y[rows[r]] = yk[r];
    std::vector<double> d(lp.num_columns());
    for (int j = 0; j < lp.num_columns(); ++j) d[j] = lp.cost()[j] - a.col(j).dot(y);
    return d;
}

}  // namespace oracle
