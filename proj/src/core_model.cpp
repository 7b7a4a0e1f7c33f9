#include "evdr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evdr {

std::int64_t energy_units_floor(double kwh) {
    // The small slack absorbs representation error such as 0.3 * 1e9.
    return static_cast<std::int64_t>(std::floor(kwh / kEnergyQuantum + 1e-6));
}

std::int64_t energy_units_ceil(double kwh) {
    return static_cast<std::int64_t>(std::ceil(kwh / kEnergyQuantum - 1e-6));
}

std::int64_t energy_units_round(double kwh) {
    return static_cast<std::int64_t>(std::llround(kwh / kEnergyQuantum));
}

std::string to_string(Unit unit) {
    switch (unit) {
        case Unit::Miles: return "miles";
        case Unit::KWh: return "kWh";
        case Unit::KW: return "kW";
        case Unit::DollarsPerKWh: return "$/kWh";
        case Unit::DollarsPerGallon: return "$/gallon";
    }
    return "?";
}

bool is_quantity(Unit unit) {
    return unit == Unit::Miles || unit == Unit::KWh || unit == Unit::KW;
}

HourlySeries::HourlySeries(std::vector<double> values, Unit unit)
    : values_(std::move(values)), unit_(unit) {
    for (std::size_t h = 0; h < values_.size(); ++h) {
        if (!std::isfinite(values_[h])) {
            throw std::invalid_argument("non-finite " + to_string(unit_) + " value at hour " +
                                        std::to_string(h));
        }
        if (is_quantity(unit_) && values_[h] < 0.0) {
            throw std::invalid_argument("negative " + to_string(unit_) + " value at hour " +
                                        std::to_string(h));
        }
    }
}

HourlySeries HourlySeries::zeros(std::size_t length, Unit unit) {
    return HourlySeries(std::vector<double>(length, 0.0), unit);
}

double HourlySeries::sum() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double HourlySeries::max() const {
    if (values_.empty()) throw std::invalid_argument("max of empty series");
    return *std::max_element(values_.begin(), values_.end());
}

double HourlySeries::mean() const {
    if (values_.empty()) throw std::invalid_argument("mean of empty series");
    return sum() / static_cast<double>(values_.size());
}

void HourlySeries::require_length(std::size_t expected, const std::string& what) const {
    if (values_.size() != expected) {
        throw std::invalid_argument(what + " has " + std::to_string(values_.size()) +
                                    " hours, expected " + std::to_string(expected));
    }
}

std::string to_string(VehicleKind kind) { return kind == VehicleKind::BEV ? "BEV" : "PHEV"; }

VehicleKind vehicle_kind_from_string(const std::string& text) {
    if (text == "BEV") return VehicleKind::BEV;
    if (text == "PHEV") return VehicleKind::PHEV;
    throw std::invalid_argument("unknown vehicle kind '" + text + "'");
}

void FleetConstants::validate() const {
    auto positive = [](double v, const char* name) {
        if (!std::isfinite(v) || v <= 0.0) throw std::invalid_argument(std::string{name} + " must be positive");
    };
    auto non_negative = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string{name} + " must be non-negative");
    };
    positive(consumption_kwh_per_mile, "consumption_kwh_per_mile");
    positive(gas_kwh_per_gallon, "gas_kwh_per_gallon");
    non_negative(bev_battery_kwh, "bev_battery_kwh");
    non_negative(bev_charge_rate_kw, "bev_charge_rate_kw");
    non_negative(phev_battery_kwh, "phev_battery_kwh");
    non_negative(phev_charge_rate_kw, "phev_charge_rate_kw");
    non_negative(phev_tank_gallons, "phev_tank_gallons");
    non_negative(phev_fuel_rate_gph, "phev_fuel_rate_gph");
    non_negative(phev_generation_kw, "phev_generation_kw");
    positive(bev_mileage_threshold, "bev_mileage_threshold");
    if (!(charge_efficiency > 0.0 && charge_efficiency <= 1.0))
        throw std::invalid_argument("charge_efficiency must be in (0, 1]");
    if (!(generation_efficiency > 0.0 && generation_efficiency <= 1.0))
        throw std::invalid_argument("generation_efficiency must be in (0, 1]");
}

void VehicleParams::validate() const {
    const double fields[] = {battery_capacity, max_charge_rate, tank_capacity, max_fuel_rate,
                             max_generation_rate, initial_storage, initial_fuel, consumption};
    for (double v : fields) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("vehicle rates and capacities must be non-negative and finite");
    }
    if (!(charge_efficiency > 0.0 && charge_efficiency <= 1.0))
        throw std::invalid_argument("charge_efficiency must be in (0, 1]");
    if (!(generation_efficiency > 0.0 && generation_efficiency <= 1.0))
        throw std::invalid_argument("generation_efficiency must be in (0, 1]");
    if (!(gas_energy_density > 0.0) || !std::isfinite(gas_energy_density))
        throw std::invalid_argument("gas_energy_density must be positive");
    if (initial_storage > battery_capacity)
        throw std::invalid_argument("initial_storage exceeds battery_capacity");
    if (initial_fuel > tank_capacity)
        throw std::invalid_argument("initial_fuel exceeds tank_capacity");
    if (kind == VehicleKind::BEV &&
        (tank_capacity != 0.0 || max_fuel_rate != 0.0 || max_generation_rate != 0.0)) {
        throw std::invalid_argument("a BEV has no tank, fueling or generation");
    }
}

VehicleParams VehicleParams::for_kind(VehicleKind kind, const FleetConstants& constants) {
    VehicleParams p;
    p.kind = kind;
    p.charge_efficiency = constants.charge_efficiency;
    p.generation_efficiency = constants.generation_efficiency;
    p.consumption = constants.consumption_kwh_per_mile;
    p.gas_energy_density = constants.gas_kwh_per_gallon;
    if (kind == VehicleKind::BEV) {
        p.battery_capacity = constants.bev_battery_kwh;
        p.max_charge_rate = constants.bev_charge_rate_kw;
    } else {
        p.battery_capacity = constants.phev_battery_kwh;
        p.max_charge_rate = constants.phev_charge_rate_kw;
        p.tank_capacity = constants.phev_tank_gallons;
        p.max_fuel_rate = constants.phev_fuel_rate_gph;
        p.max_generation_rate = constants.phev_generation_kw;
    }
    p.initial_storage = p.battery_capacity;
    p.initial_fuel = p.tank_capacity;
    return p;
}

void Vehicle::validate(std::size_t horizon) const {
    profile.require_length(horizon, "profile of vehicle " + id);
    if (profile.unit() != Unit::Miles) throw std::invalid_argument("vehicle profile must be in miles");
    if (plug_in_hour < 0 || static_cast<std::size_t>(plug_in_hour) >= horizon)
        throw std::invalid_argument("plug_in_hour of vehicle " + id + " outside the horizon");
    params.validate();
}

void Scenario::validate() const {
    if (horizon == 0) throw std::invalid_argument("scenario horizon must be positive");
    base_load.require_length(horizon, "base_load");
    elec_price.require_length(horizon, "elec_price");
    gas_price.require_length(horizon, "gas_price");
    charge_cap.require_length(horizon, "charge_cap");
    for (double v : charge_cap.values())
        if (v < 0.0) throw std::invalid_argument("charge_cap must be non-negative");
    if (fleet_size < 0) throw std::invalid_argument("fleet_size must be non-negative");
    constants.validate();
}

HourlySeries cap_from_load(const HourlySeries& base_load, double alpha) {
    if (base_load.empty()) throw std::invalid_argument("cap_from_load: empty load series");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("cap_from_load: alpha must be positive");
    const auto& load = base_load.values();
    for (double v : load) {
        if (!std::isfinite(v)) throw std::invalid_argument("cap_from_load: non-finite load");
        if (v < 0.0) throw std::invalid_argument("cap_from_load: negative load");
    }

    std::vector<double> cap(load.size(), 0.0);
    for (std::size_t day_start = 0; day_start < load.size(); day_start += kHoursPerDay) {
        const std::size_t day_end = std::min(load.size(), day_start + kHoursPerDay);
        const double peak = *std::max_element(load.begin() + day_start, load.begin() + day_end);
        const double limit = alpha * peak;
        for (std::size_t h = day_start; h < day_end; ++h) {
            if (!(limit > load[h])) continue;
            std::int64_t units = energy_units_floor(limit - load[h]);
            while (units > 0 && load[h] + energy_from_units(units) > limit) --units;
            cap[h] = energy_from_units(units);
        }
    }
    return HourlySeries(std::move(cap), Unit::KWh);
}

VehicleKind classify_vehicle(const HourlySeries& profile, double threshold) {
    if (profile.empty()) throw std::invalid_argument("classify_vehicle: empty profile");
    if (profile.size() < static_cast<std::size_t>(kHoursPerDay))
        throw std::invalid_argument("classify_vehicle: profile shorter than one day");
    double miles = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) miles += profile[h];
    return miles < threshold ? VehicleKind::BEV : VehicleKind::PHEV;
}

std::vector<double> tile(const std::vector<double>& day, std::size_t length) {
    if (day.empty()) throw std::invalid_argument("tile: empty profile");
    std::vector<double> out(length);
    for (std::size_t h = 0; h < length; ++h) out[h] = day[h % day.size()];
    return out;
}

}  // namespace evdr
