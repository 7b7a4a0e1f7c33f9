#pragma once

#include <random>
#include <string>
#include <vector>

#include "evdr/config.hpp"
#include "evdr/core_model.hpp"
#include "evdr/sim.hpp"

namespace testing_support {

// Small scenario with the reference base load per vehicle (6 kW).
inline evdr::ScenarioConfig small_config(int fleet = 200, std::size_t horizon = 48) {
    evdr::ScenarioConfig c;
    c.horizon = horizon;
    c.fleet_size = fleet;
    c.runs = 2;
    c.training_size = 150;
    c.clusters = 6;
    c.kmeans_restarts = 2;
    c.base_peak_kw = 6.0 * fleet;
    return c;
}

inline evdr::VehicleParams bev(double capacity = 10.0, double rate = 3.0, double start = 10.0) {
    evdr::VehicleParams p;
    p.kind = evdr::VehicleKind::BEV;
    p.battery_capacity = capacity;
    p.max_charge_rate = rate;
    p.charge_efficiency = 0.9;
    p.generation_efficiency = 0.3;
    p.initial_storage = start;
    p.consumption = 0.3;
    return p;
}

inline evdr::VehicleParams phev(double capacity = 8.0, double start = 8.0) {
    evdr::VehicleParams p;
    p.kind = evdr::VehicleKind::PHEV;
    p.battery_capacity = capacity;
    p.max_charge_rate = 3.0;
    p.tank_capacity = 2.0;
    p.max_fuel_rate = 9.0;
    p.max_generation_rate = 20.0;
    p.charge_efficiency = 0.9;
    p.generation_efficiency = 0.3;
    p.initial_storage = start;
    p.initial_fuel = 2.0;
    p.consumption = 0.3;
    return p;
}

inline evdr::Vehicle make_vehicle(std::string id, evdr::VehicleParams params, std::vector<double> miles,
                                  int plug_in = 0) {
    evdr::Vehicle v;
    v.id = std::move(id);
    v.params = params;
    v.profile = evdr::HourlySeries(std::move(miles), evdr::Unit::Miles);
    v.plug_in_hour = plug_in;
    return v;
}

inline evdr::Scenario flat_scenario(std::size_t n, std::vector<double> prices, double cap) {
    evdr::Scenario s;
    s.horizon = n;
    s.base_load = evdr::HourlySeries::zeros(n, evdr::Unit::KW);
    s.elec_price = evdr::HourlySeries(std::move(prices), evdr::Unit::DollarsPerKWh);
    s.gas_price = evdr::flat_series(n, 3.9, evdr::Unit::DollarsPerGallon);
    s.charge_cap = evdr::flat_series(n, cap, evdr::Unit::KWh);
    return s;
}

}  // namespace testing_support
