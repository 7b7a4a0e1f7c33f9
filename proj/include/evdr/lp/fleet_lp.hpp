#pragma once

#include <vector>

#include "evdr/clustering.hpp"
#include "evdr/core_model.hpp"
#include "evdr/lp/linear_program.hpp"
#include "evdr/lp/simplex.hpp"

namespace evdr::lp {

// Variable families of one block (a cluster in the clustered model, a single
// vehicle in the full model).
enum class Family { Storage = 0, Charge = 1, FuelStorage = 2, Fuel = 3, Generate = 4 };
inline constexpr int kFamilies = 5;

struct Block {
    VehicleParams params;
    std::vector<double> miles;  // length n
    double weight = 1.0;        // b_l
    int first_charge_hour = 0;  // charging before this hour is fixed to zero

    [[nodiscard]] bool driving(std::size_t h) const { return miles[h] > 0.0; }
};

struct FleetModelOptions {
    bool include_cap = true;
    bool respect_plug_in = true;  // full model only
};

/// Fleet LP over `blocks`:
///   battery (l,h):  s_h - s_{h-1} - c_eff c_h - g_eff g_h = -(kWh/mile) t_h
///   fuel (l,h):     sg_h - sg_{h-1} - f_h + (gal/kWh) g_h = 0
///   cap h:          sum_l b_l c_lh <= cap_h
/// with s_{-1}, sg_{-1} the initial state moved to the right-hand side,
/// box bounds from the params, c fixed to 0 while driving and f, g fixed to 0
/// while parked. Objective sum_l b_l (p^T c_l + (p^g)^T f_l).
class FleetModel {
public:
    FleetModel(std::vector<Block> blocks, const Scenario& scenario, const FleetModelOptions& options = {});

    [[nodiscard]] const LinearProgram& program() const noexcept { return lp_; }
    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] std::size_t horizon() const noexcept { return n_; }
    [[nodiscard]] bool has_cap_rows() const noexcept { return cap_rows_; }

    [[nodiscard]] int column(std::size_t block, std::size_t hour, Family family) const {
        return static_cast<int>((block * kFamilies + static_cast<std::size_t>(family)) * n_ + hour);
    }
    [[nodiscard]] int battery_row(std::size_t block, std::size_t hour) const {
        return static_cast<int>(block * 2 * n_ + hour);
    }
    [[nodiscard]] int fuel_row(std::size_t block, std::size_t hour) const {
        return static_cast<int>(block * 2 * n_ + n_ + hour);
    }
    [[nodiscard]] int cap_row(std::size_t hour) const { return static_cast<int>(blocks_.size() * 2 * n_ + hour); }

private:
    std::vector<Block> blocks_;
    std::size_t n_;
    bool cap_rows_;
    LinearProgram lp_;
};

/// Clustered model: one block per cluster, centroids tiled to the horizon.
FleetModel build_clp(const ClusterSet& set, const Scenario& scenario, const FleetModelOptions& options = {});

/// Full model: one block per vehicle with unit weight. Validation-scale only.
FleetModel build_full_lp(const std::vector<Vehicle>& fleet, const Scenario& scenario,
                         const FleetModelOptions& options = {});

struct BlockSolution {
    std::vector<double> storage, charge, fuel_storage, fuel, generate;
    std::vector<double> lambda_s;   // battery-balance multipliers (negated row duals)
    std::vector<double> lambda_sg;  // fuel-balance multipliers (negated row duals)
    std::vector<double> charge_reduced_cost;  // reduced cost of c_lh, every hour
    std::vector<double> eta1;  // reduced cost of c on driving hours (0 elsewhere)
    std::vector<double> eta2;  // reduced cost of f on parked hours
    std::vector<double> eta3;  // reduced cost of g on parked hours
};

/// Signs: theta = cap-row dual <= 0, and for every charging column
///   reduced cost = b_l p_h - c_eff lambda_s_lh - b_l theta_h.
struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    double objective = 0.0;
    double dual_objective = 0.0;
    std::vector<BlockSolution> blocks;
    std::vector<double> theta;
    SimplexResult raw;

    /// Lower/upper-bound parts of a column's reduced cost.
    [[nodiscard]] double nu(int col) const { return std::max(raw.reduced_costs.at(col), 0.0); }
    [[nodiscard]] double gamma(int col) const { return std::max(-raw.reduced_costs.at(col), 0.0); }
};

LpSolution solve(const FleetModel& model, const SimplexOptions& options = {});

/// Dual objective of `result` for `lp`: b^T y plus bound terms. Equals the
/// primal objective at an optimum.
double dual_objective(const LinearProgram& lp, const SimplexResult& result);

}  // namespace evdr::lp
