#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evdr/clustering.hpp"
#include "evdr/config.hpp"
#include "evdr/core_model.hpp"
#include "evdr/dispatch.hpp"
#include "evdr/ingest.hpp"
#include "evdr/lp/fleet_lp.hpp"
#include "evdr/pricing.hpp"

namespace evdr {

struct RunMetrics {
    double peak_increase_abs = 0.0;  // kW
    double peak_increase_pct = 0.0;  // % of the base peak
    double grid_energy = 0.0;        // MWh drawn for charging
    double gasoline_energy = 0.0;    // MWh of gasoline energy burned
    double total_cost = 0.0;         // $
    double elec_cost = 0.0;          // $
    double gas_cost = 0.0;           // $
    double cost_per_mile = 0.0;      // $/mile
    int demand_failures = 0;         // failure events

    // Diagnostics
    int failed_vehicles = 0;
    double unmet_energy = 0.0;     // kWh
    double miles = 0.0;
    double purchase_cost = 0.0;    // sum p c + p^g f, the LP objective form
    double energy_residual = 0.0;  // relative error of the fleet energy identity
    double max_cap_excess = 0.0;   // max_h (fleet_h - cap_h), kWh; <= 0 when the cap holds
};

struct RunResult {
    DispatcherKind dispatcher = DispatcherKind::CAP;
    RunMetrics metrics;
    std::vector<double> fleet_load;          // kW per hour
    std::vector<std::int64_t> fleet_units;   // exact per-hour charging
    std::vector<VehicleSchedule> schedules;  // arrival order
};

/// Everything a run needs that is computed once per scenario: the scenario
/// itself, the clusters, and the CLP-derived prices and ratios.
struct SimContext {
    ScenarioConfig config;
    Scenario scenario;
    std::vector<Archetype> archetypes;
    std::optional<ProfileTable> fleet_pool;  // when the fleet comes from a file
    ClusterSet clusters;
    PriceBook prices;
    RatioBook ratios;
    double clp_objective = 0.0;
    double clp_seconds = 0.0;
};

Scenario make_scenario(const ScenarioConfig& config);
std::vector<Archetype> config_archetypes(const ScenarioConfig& config);
ProfileTable training_profiles(const ScenarioConfig& config);
ClusterSet train_clusters(const ScenarioConfig& config, const ProfileTable& profiles);

/// Solves the CLP for `clusters` under `scenario`; throws std::runtime_error
/// unless it is optimal.
void price_context(SimContext& ctx);

/// make_scenario + training + clustering + pricing.
SimContext prepare_context(const ScenarioConfig& config);

/// Fleet for one run: profiles tiled to the horizon, kind from the first
/// day, full battery and tank, plug-in hour uniform over the window.
std::vector<Vehicle> sample_fleet(const SimContext& ctx, std::uint64_t run_seed);

/// Build vehicles from explicit daily profiles and plug-in hours.
std::vector<Vehicle> make_fleet(const ProfileTable& profiles, const std::vector<int>& plug_in_hours,
                                std::size_t horizon, const FleetConstants& constants);

/// Dispatch `fleet` in arrival order (plug-in hour, then id) with a fresh ledger.
RunResult run_fleet(const SimContext& ctx, const std::vector<Vehicle>& fleet, DispatcherKind dispatcher,
                    DispatchLog* log = nullptr, bool keep_schedules = false);

RunResult run_scenario(const SimContext& ctx, DispatcherKind dispatcher, std::uint64_t run_seed);

RunMetrics compute_metrics(const Scenario& scenario, const std::vector<Vehicle>& fleet,
                           const std::vector<VehicleSchedule>& schedules, std::vector<std::int64_t>* fleet_units = nullptr);

struct MetricSummary {
    RunMetrics mean;
    RunMetrics stddev;
    std::vector<double> mean_load;  // kW per hour, base excluded
    std::vector<RunMetrics> runs;
};

struct BatchResult {
    std::vector<DispatcherKind> dispatchers;
    std::map<DispatcherKind, MetricSummary> summary;
    int runs = 0;
};

/// `runs` independent fleets (seeded from `seed` and the run index), each
/// dispatched by every requested dispatcher. Runs execute on `threads`
/// workers (0 = EVDR_THREADS or the hardware concurrency); the reduction is
/// in run order, so results do not depend on the thread count.
BatchResult run_batch(const SimContext& ctx, const std::vector<DispatcherKind>& dispatchers, int runs,
                      std::uint64_t seed, unsigned threads = 0);

unsigned default_thread_count();

/// Two BEVs over three hours with a 0.3 kWh per-hour cap and rising prices.
/// Vehicle 1 drives in the last hour, vehicle 2 in the middle one; each
/// needs 0.3 kWh. First-come cheapest-hour charging lets vehicle 1 take the
/// only hour vehicle 2 can use.
struct MicroInstance {
    Scenario scenario;
    ClusterSet clusters;  // one singleton cluster per vehicle
    std::vector<Vehicle> fleet;
};

MicroInstance three_hour_instance();

struct MicroOutcome {
    double clp_objective = 0.0;
    PriceBook prices;
    std::vector<VehicleSchedule> lowest_cost;  // cheapest hours, ledger enforced
    std::vector<VehicleSchedule> cap;
};

MicroOutcome run_three_hour_example();

void write_comparison_csv(const BatchResult& batch, const Scenario& scenario, const std::filesystem::path& path);
void write_load_csv(const BatchResult& batch, DispatcherKind dispatcher, const Scenario& scenario,
                    const std::filesystem::path& path);

}  // namespace evdr
