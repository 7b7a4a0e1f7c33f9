#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace evdr {

inline constexpr int kHoursPerDay = 24;

// Charging energy is accounted in integer multiples of this quantum so that
// fleet totals are exact regardless of summation order.
inline constexpr double kEnergyQuantum = 1e-9;  // kWh

std::int64_t energy_units_floor(double kwh);
std::int64_t energy_units_ceil(double kwh);
std::int64_t energy_units_round(double kwh);
inline double energy_from_units(std::int64_t units) { return static_cast<double>(units) * kEnergyQuantum; }

enum class Unit { Miles, KWh, KW, DollarsPerKWh, DollarsPerGallon };

std::string to_string(Unit unit);
bool is_quantity(Unit unit);  // quantities must be non-negative, prices may not be

/// Fixed-length hourly vector tagged with a unit.
///
/// Quantities (miles, kWh, kW) are checked non-negative on construction;
/// prices may go negative.
class HourlySeries {
public:
    HourlySeries() = default;
    HourlySeries(std::vector<double> values, Unit unit);

    static HourlySeries zeros(std::size_t length, Unit unit);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
    [[nodiscard]] Unit unit() const noexcept { return unit_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t h) const { return values_[h]; }
    [[nodiscard]] double at(std::size_t h) const { return values_.at(h); }

    [[nodiscard]] double sum() const noexcept;
    [[nodiscard]] double max() const;
    [[nodiscard]] double mean() const;

    void require_length(std::size_t expected, const std::string& what) const;

private:
    std::vector<double> values_;
    Unit unit_ = Unit::KWh;
};

enum class VehicleKind { BEV, PHEV };

std::string to_string(VehicleKind kind);
VehicleKind vehicle_kind_from_string(const std::string& text);

/// Physical constants used to derive per-kind vehicle parameters.
/// The defaults are typical 2011-era figures; all are overridable from config.
struct FleetConstants {
    double consumption_kwh_per_mile = 0.30;
    double gas_kwh_per_gallon = 33.7;
    double bev_battery_kwh = 24.0;
    double bev_charge_rate_kw = 3.3;
    double phev_battery_kwh = 16.0;
    double phev_charge_rate_kw = 3.3;
    double phev_tank_gallons = 9.0;
    double phev_fuel_rate_gph = 9.0;
    double phev_generation_kw = 20.0;
    double charge_efficiency = 0.90;
    double generation_efficiency = 0.30;
    double bev_mileage_threshold = 70.0;  // daily miles; at or above means PHEV

    void validate() const;
};

struct VehicleParams {
    VehicleKind kind = VehicleKind::BEV;
    double battery_capacity = 0.0;     // kWh
    double max_charge_rate = 0.0;      // kWh per hour
    double tank_capacity = 0.0;        // gallons
    double max_fuel_rate = 0.0;        // gallons per hour
    double max_generation_rate = 0.0;  // kWh of gasoline energy per hour
    double charge_efficiency = 1.0;
    double generation_efficiency = 1.0;
    double initial_storage = 0.0;  // kWh
    double initial_fuel = 0.0;     // gallons
    double consumption = 0.0;      // kWh per mile
    double gas_energy_density = 33.7;  // kWh per gallon

    [[nodiscard]] double gallons_per_kwh() const noexcept { return 1.0 / gas_energy_density; }

    void validate() const;

    /// Full battery and tank, per-kind figures from `constants`.
    static VehicleParams for_kind(VehicleKind kind, const FleetConstants& constants);
};

struct Vehicle {
    std::string id;
    VehicleParams params;
    HourlySeries profile;  // miles per hour over the horizon
    int plug_in_hour = 0;

    [[nodiscard]] bool driving(std::size_t h) const { return profile[h] > 0.0; }
    void validate(std::size_t horizon) const;
};

struct Scenario {
    std::size_t horizon = 0;
    HourlySeries base_load;   // kW without the fleet
    HourlySeries elec_price;  // $/kWh
    HourlySeries gas_price;   // $/gallon
    HourlySeries charge_cap;  // kWh per hour, fleet total
    int fleet_size = 0;
    std::uint64_t rng_seed = 0;
    FleetConstants constants;

    void validate() const;
};

/// Per-hour fleet charging allowance: alpha times the calendar-day peak of
/// `base_load`, minus the load itself, clipped at zero. Values are rounded
/// down to the energy quantum such that `load + cap <= alpha * peak` holds
/// in floating point.
HourlySeries cap_from_load(const HourlySeries& base_load, double alpha);

/// BEV when the first day's mileage is below `threshold` miles.
VehicleKind classify_vehicle(const HourlySeries& profile, double threshold = 70.0);

/// Repeat a daily profile until it covers `length` hours.
std::vector<double> tile(const std::vector<double>& day, std::size_t length);

}  // namespace evdr
