#pragma once

#include <filesystem>
#include <vector>

#include "evdr/clustering.hpp"
#include "evdr/core_model.hpp"
#include "evdr/lp/fleet_lp.hpp"

namespace evdr {

/// Constraint-adjusted prices d_l per cluster.
///
/// On hours where the cluster's base profile is parked, d_lh is the reduced
/// cost of the charging column c_lh. On driving hours the column is fixed at
/// zero, so its fixing multiplier is not unique; d keeps the reduced cost
/// unless that undercuts the cheapest parked hour, in which case it is lifted
/// just above it. In both cases d_lh + eta_lh equals the reduced cost.
struct PriceBook {
    std::size_t horizon = 0;
    std::vector<std::vector<double>> d;
    std::vector<std::vector<double>> eta;        // 0 on parked hours
    std::vector<std::vector<double>> lp_charge;  // the cluster's LP charging, used to break ties
    std::vector<double> report_scale;            // max |d_l|, for normalized output

    [[nodiscard]] std::size_t k() const noexcept { return d.size(); }
};

/// Per-cluster shares of the LP schedule.
struct RatioBook {
    std::size_t horizon = 0;
    std::vector<std::vector<double>> charge;    // r^c
    std::vector<std::vector<double>> generate;  // r^g
    std::vector<std::vector<double>> fuel;      // r^f
    // Energy-source shares of the cluster's supply, summing to 1 when any:
    // grid charging (c_eff sum c), generation from fuel already in the tank,
    // and generation from fuel bought during the horizon.
    std::vector<double> share_charge, share_generate, share_fuel;

    [[nodiscard]] std::size_t k() const noexcept { return charge.size(); }
};

PriceBook compute_prices(const lp::LpSolution& sol, const Scenario& scenario, const ClusterSet& set);

RatioBook compute_ratios(const lp::LpSolution& sol, const ClusterSet& set);

/// Divide by the largest-magnitude element; all-zero input stays zero.
std::vector<double> normalize_for_report(const std::vector<double>& series);

/// Scale non-negative `values` to fractions summing to exactly 1.0 in
/// left-to-right double addition, or all zeros when the total is zero.
std::vector<double> to_fractions(const std::vector<double>& values);

void save_price_book(const PriceBook& book, const std::filesystem::path& path);
PriceBook load_price_book(const std::filesystem::path& path);
void save_ratio_book(const RatioBook& book, const std::filesystem::path& path);
RatioBook load_ratio_book(const std::filesystem::path& path);

}  // namespace evdr
