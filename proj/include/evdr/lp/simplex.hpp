#pragma once

#include <string>
#include <vector>

#include "evdr/lp/linear_program.hpp"

namespace evdr::lp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string to_string(LpStatus status);

struct SimplexOptions {
    int max_iterations = 1'000'000;
    double primal_tol = 1e-9;  // bound tolerance in the scaled problem
    double dual_tol = 1e-9;    // reduced-cost tolerance in the scaled problem
    int refactor_interval = 100;
    int stall_limit = 300;     // degenerate pivots before switching to Bland's rule
    bool scale = true;
};

/// Duals follow the Lagrangian c - A^T y, so y <= 0 on binding <= rows and
/// y >= 0 on binding >= rows of a minimization.
struct SimplexResult {
    LpStatus status = LpStatus::NumericalFailure;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> row_activity;
    std::vector<double> duals;          // y, one per row (0 on rows dropped by presolve)
    std::vector<double> reduced_costs;  // c - A^T y, exactly 0 on basic columns
    // Final basis, one entry per kept row: a column index, or -(row + 1) for
    // the unit column of that row (its slack).
    std::vector<int> basis;
    std::vector<char> row_kept;
    double infeasibility = 0.0;  // phase-1 optimum in original units when Infeasible
    int iterations = 0;
    int phase1_iterations = 0;
};

/// Bounded-variable revised primal simplex with a two-phase start.
SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace evdr::lp
