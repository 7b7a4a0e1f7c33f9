#include "evdr/lp/fleet_lp.hpp"

#include <stdexcept>
#include <string>

namespace evdr::lp {
namespace {

const char* family_tag(Family f) {
    switch (f) {
        case Family::Storage: return "s";
        case Family::Charge: return "c";
        case Family::FuelStorage: return "sg";
        case Family::Fuel: return "f";
        case Family::Generate: return "g";
    }
    return "?";
}

}  // namespace

FleetModel::FleetModel(std::vector<Block> blocks, const Scenario& scenario, const FleetModelOptions& options)
    : blocks_(std::move(blocks)), n_(scenario.horizon), cap_rows_(options.include_cap) {
    scenario.validate();
    if (n_ == 0) throw std::invalid_argument("fleet model: empty horizon");
    for (const auto& b : blocks_) {
        if (b.miles.size() != n_) throw std::invalid_argument("fleet model: block profile length differs from horizon");
        if (!(b.weight > 0.0)) throw std::invalid_argument("fleet model: block weights must be positive");
        b.params.validate();
    }

    const auto& p = scenario.elec_price;
    const auto& pg = scenario.gas_price;
    const std::size_t k = blocks_.size();

    for (std::size_t l = 0; l < k; ++l) {
        const auto& b = blocks_[l];
        const auto& v = b.params;
        const bool bev = v.kind == VehicleKind::BEV;
        for (int f = 0; f < kFamilies; ++f) {
            const auto fam = static_cast<Family>(f);
            for (std::size_t h = 0; h < n_; ++h) {
                const bool drive = b.driving(h);
                double cost = 0.0, upper = 0.0;
                switch (fam) {
                    case Family::Storage: upper = v.battery_capacity; break;
                    case Family::Charge:
                        cost = b.weight * p[h];
                        upper = (drive || static_cast<int>(h) < b.first_charge_hour) ? 0.0 : v.max_charge_rate;
                        break;
                    case Family::FuelStorage: upper = bev ? 0.0 : v.tank_capacity; break;
                    case Family::Fuel:
                        cost = b.weight * pg[h];
                        upper = (bev || !drive) ? 0.0 : v.max_fuel_rate;
                        break;
                    case Family::Generate: upper = (bev || !drive) ? 0.0 : v.max_generation_rate; break;
                }
                lp_.add_column(cost, 0.0, upper,
                               std::string(family_tag(fam)) + "_" + std::to_string(l) + "_" + std::to_string(h));
            }
        }
    }

    for (std::size_t l = 0; l < k; ++l) {
        const auto& b = blocks_[l];
        const auto& v = b.params;
        for (std::size_t h = 0; h < n_; ++h) {
            double rhs = -v.consumption * b.miles[h];
            if (h == 0) rhs += v.initial_storage;
            const int r = lp_.add_row(RowSense::Equal, rhs, "bat_" + std::to_string(l) + "_" + std::to_string(h));
            lp_.add_coefficient(r, column(l, h, Family::Storage), 1.0);
            if (h > 0) lp_.add_coefficient(r, column(l, h - 1, Family::Storage), -1.0);
            lp_.add_coefficient(r, column(l, h, Family::Charge), -v.charge_efficiency);
            lp_.add_coefficient(r, column(l, h, Family::Generate), -v.generation_efficiency);
        }
        for (std::size_t h = 0; h < n_; ++h) {
            const double rhs = h == 0 ? v.initial_fuel : 0.0;
            const int r = lp_.add_row(RowSense::Equal, rhs, "fuel_" + std::to_string(l) + "_" + std::to_string(h));
            lp_.add_coefficient(r, column(l, h, Family::FuelStorage), 1.0);
            if (h > 0) lp_.add_coefficient(r, column(l, h - 1, Family::FuelStorage), -1.0);
            lp_.add_coefficient(r, column(l, h, Family::Fuel), -1.0);
            lp_.add_coefficient(r, column(l, h, Family::Generate), v.gallons_per_kwh());
        }
    }

    if (cap_rows_) {
        for (std::size_t h = 0; h < n_; ++h) {
            const int r = lp_.add_row(RowSense::LessEqual, scenario.charge_cap[h], "cap_" + std::to_string(h));
            for (std::size_t l = 0; l < k; ++l)
                lp_.add_coefficient(r, column(l, h, Family::Charge), blocks_[l].weight);
        }
    }
}

FleetModel build_clp(const ClusterSet& set, const Scenario& scenario, const FleetModelOptions& options) {
    set.validate();
    std::vector<Block> blocks;
    for (std::size_t l = 0; l < set.k(); ++l) {
        Block b;
        b.params = set.params[l];
        b.miles = tile(set.centroids[l], scenario.horizon);
        b.weight = set.weights[l];
        blocks.push_back(std::move(b));
    }
    return FleetModel(std::move(blocks), scenario, options);
}

FleetModel build_full_lp(const std::vector<Vehicle>& fleet, const Scenario& scenario, const FleetModelOptions& options) {
    std::vector<Block> blocks;
    for (const auto& v : fleet) {
        v.validate(scenario.horizon);
        Block b;
        b.params = v.params;
        b.miles = v.profile.values();
        b.weight = 1.0;
        b.first_charge_hour = options.respect_plug_in ? v.plug_in_hour : 0;
        blocks.push_back(std::move(b));
    }
    return FleetModel(std::move(blocks), scenario, options);
}

double dual_objective(const LinearProgram& lp, const SimplexResult& result) {
    double obj = 0.0;
    for (int i = 0; i < lp.num_rows(); ++i) obj += lp.rhs()[i] * result.duals.at(i);
    for (int j = 0; j < lp.num_columns(); ++j) {
        const double d = result.reduced_costs.at(j);
        if (d > 0.0) obj += d * lp.lower()[j];
        else if (d < 0.0) obj += d * lp.upper()[j];
    }
    return obj;
}

LpSolution solve(const FleetModel& model, const SimplexOptions& options) {
    LpSolution sol;
    sol.raw = solve_simplex(model.program(), options);
    sol.status = sol.raw.status;
    if (sol.status != LpStatus::Optimal) return sol;

    const auto& r = sol.raw;
    const std::size_t n = model.horizon();
    sol.objective = r.objective;
    sol.dual_objective = dual_objective(model.program(), r);
    sol.theta.assign(n, 0.0);
    if (model.has_cap_rows())
        for (std::size_t h = 0; h < n; ++h) sol.theta[h] = r.duals[model.cap_row(h)];

    for (std::size_t l = 0; l < model.blocks().size(); ++l) {
        const auto& blk = model.blocks()[l];
        BlockSolution b;
        auto series = [&](Family f, std::vector<double>& out) {
            out.resize(n);
            for (std::size_t h = 0; h < n; ++h) out[h] = r.x[model.column(l, h, f)];
        };
        series(Family::Storage, b.storage);
        series(Family::Charge, b.charge);
        series(Family::FuelStorage, b.fuel_storage);
        series(Family::Fuel, b.fuel);
        series(Family::Generate, b.generate);
        b.lambda_s.resize(n);
        b.lambda_sg.resize(n);
        b.charge_reduced_cost.resize(n);
        b.eta1.assign(n, 0.0);
        b.eta2.assign(n, 0.0);
        b.eta3.assign(n, 0.0);
        for (std::size_t h = 0; h < n; ++h) {
            b.lambda_s[h] = -r.duals[model.battery_row(l, h)];
            b.lambda_sg[h] = -r.duals[model.fuel_row(l, h)];
            b.charge_reduced_cost[h] = r.reduced_costs[model.column(l, h, Family::Charge)];
            if (blk.driving(h)) b.eta1[h] = b.charge_reduced_cost[h];
            else {
                b.eta2[h] = r.reduced_costs[model.column(l, h, Family::Fuel)];
                b.eta3[h] = r.reduced_costs[model.column(l, h, Family::Generate)];
            }
        }
        sol.blocks.push_back(std::move(b));
    }
    return sol;
}

}  // namespace evdr::lp
