#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "evdr/clustering.hpp"
#include "evdr/core_model.hpp"
#include "evdr/pricing.hpp"

namespace evdr {

/// Remaining fleet charging allowance per hour, held in integer energy units
/// so that debits are exact. Thread-safe: reads take a versioned snapshot and
/// debits are an atomic check-and-commit against that version.
class ChargeLedger {
public:
    explicit ChargeLedger(const HourlySeries& cap);

    [[nodiscard]] std::size_t horizon() const noexcept { return initial_.size(); }
    [[nodiscard]] std::vector<std::int64_t> snapshot(std::uint64_t* version = nullptr) const;
    [[nodiscard]] std::int64_t remaining_units(std::size_t h) const;
    [[nodiscard]] double remaining(std::size_t h) const { return energy_from_units(remaining_units(h)); }
    [[nodiscard]] const std::vector<std::int64_t>& initial_units() const noexcept { return initial_; }
    [[nodiscard]] std::uint64_t version() const;

    /// Debit `units` if the ledger is still at `expected_version` and every
    /// hour has enough left. Returns false (and changes nothing) otherwise.
    bool try_commit(const std::vector<std::int64_t>& units, std::uint64_t expected_version);

    /// Debit regardless of version; throws std::runtime_error on overdraw.
    void commit(const std::vector<std::int64_t>& units);

private:
    mutable std::mutex mu_;
    std::vector<std::int64_t> initial_;
    std::vector<std::int64_t> remaining_;
    std::uint64_t version_ = 0;
};

struct DemandFailure {
    int hour = 0;
    double unmet_kwh = 0.0;
};

struct VehicleSchedule {
    std::string vehicle_id;
    int cluster = -1;
    std::vector<std::int64_t> charge_units;  // exact grid draw per hour
    std::vector<double> charge;              // kWh from the grid
    std::vector<double> generate;            // kWh of gasoline energy burned
    std::vector<double> fuel;                // gallons bought
    std::vector<double> storage;             // battery kWh at the end of each hour
    std::vector<double> fuel_storage;        // tank gallons at the end of each hour
    std::vector<double> unmet;               // driving energy not served, kWh
    std::vector<int> fuel_notifications;     // hours the driver is asked to refuel
    std::vector<DemandFailure> failures;

    [[nodiscard]] bool demand_failure() const noexcept { return !failures.empty(); }
    [[nodiscard]] double total_unmet() const;
};

enum class DispatcherKind { CAP, Standard, LowestCost, PrimalPct };

std::string to_string(DispatcherKind kind);
DispatcherKind dispatcher_from_string(const std::string& text);
const std::vector<DispatcherKind>& all_dispatchers();

/// Hours in the order CAP fills them: ascending d, then hours the cluster's
/// LP charges in, then raw price, then hour.
std::vector<std::size_t> cap_hour_order(const PriceBook& book, int cluster, const HourlySeries& prices);

/// Fills the cheapest admissible hours first under constraint-adjusted
/// prices and debits the ledger.
VehicleSchedule dispatch_cap(const Vehicle& vehicle, const PriceBook& book, const ClusterSet& set,
                             const HourlySeries& prices, ChargeLedger& ledger);

/// Charges at the full rate whenever connected and not full.
VehicleSchedule dispatch_standard(const Vehicle& vehicle);

/// Same engine as dispatch_cap ranked by raw price. Without a ledger the cap
/// is ignored; with one, it is respected and debited.
VehicleSchedule dispatch_lowest_cost(const Vehicle& vehicle, const HourlySeries& prices,
                                     ChargeLedger* ledger = nullptr);

/// Follows the cluster's LP schedule shares, then repairs any remaining
/// deficit greedily by raw price within the ledger.
VehicleSchedule dispatch_primal_pct(const Vehicle& vehicle, const RatioBook& ratios, const ClusterSet& set,
                                    const HourlySeries& prices, ChargeLedger& ledger);

/// Problems with `schedule` as a plan for `vehicle`: balance identities,
/// bounds, charging only while connected, generation only while driving.
/// Empty when the schedule is valid.
std::vector<std::string> check_schedule(const Vehicle& vehicle, const VehicleSchedule& schedule, double tol = 1e-9);

/// JSON-lines record of dispatch decisions.
class DispatchLog {
public:
    void arrival(const Vehicle& vehicle, DispatcherKind kind);
    void schedule(const Vehicle& vehicle, const VehicleSchedule& schedule);
    [[nodiscard]] std::vector<std::string> lines() const;
    void write(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::vector<std::string> lines_;
};

}  // namespace evdr
