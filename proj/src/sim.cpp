#include "evdr/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "evdr/rng.hpp"

namespace evdr {

Scenario make_scenario(const ScenarioConfig& config) {
    config.validate();
    const std::size_t n = config.horizon;
    Scenario s;
    s.horizon = n;
    s.base_load = config.base_load_file.empty() ? synth_base_load(n, config.base_peak_kw)
                                                : load_series(config.base_load_file, n, Unit::KW);
    s.elec_price = config.elec_price_file.empty() ? tou_prices(n, config.tariff)
                                                  : load_series(config.elec_price_file, n, Unit::DollarsPerKWh);
    s.gas_price = config.gas_price_file.empty() ? flat_series(n, config.gas_price, Unit::DollarsPerGallon)
                                                : load_series(config.gas_price_file, n, Unit::DollarsPerGallon);
    s.charge_cap = cap_from_load(s.base_load, config.alpha);
    s.fleet_size = config.fleet_size;
    s.rng_seed = config.seed;
    s.constants = config.constants;
    s.validate();
    return s;
}

std::vector<Archetype> config_archetypes(const ScenarioConfig& config) {
    return config.archetypes_file.empty() ? default_archetypes() : load_archetypes(config.archetypes_file);
}

ProfileTable training_profiles(const ScenarioConfig& config) {
    if (!config.training_profiles_file.empty()) return load_profiles(config.training_profiles_file);
    return synth_fleet(config.training_size, config_archetypes(config), derive_seed(config.seed, streams::kTraining),
                       config.synth);
}

ClusterSet train_clusters(const ScenarioConfig& config, const ProfileTable& profiles) {
    auto set = kmeans(profiles, config.clusters, config.kmeans_restarts, derive_seed(config.seed, streams::kKMeans),
                      config.constants);
    set.weights = cluster_weights(set, config.fleet_size);
    set.validate();
    return set;
}

void price_context(SimContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = lp::build_clp(ctx.clusters, ctx.scenario);
    const auto sol = lp::solve(model);
    ctx.clp_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sol.status != lp::LpStatus::Optimal)
        throw std::runtime_error("clustered LP did not solve: " + lp::to_string(sol.status));
    ctx.clp_objective = sol.objective;
    ctx.prices = compute_prices(sol, ctx.scenario, ctx.clusters);
    ctx.ratios = compute_ratios(sol, ctx.clusters);
}

SimContext prepare_context(const ScenarioConfig& config) {
    SimContext ctx;
    ctx.config = config;
    ctx.scenario = make_scenario(config);
    ctx.archetypes = config_archetypes(config);
    if (!config.fleet_profiles_file.empty()) ctx.fleet_pool = load_profiles(config.fleet_profiles_file);
    ctx.clusters = train_clusters(config, training_profiles(config));
    price_context(ctx);
    return ctx;
}

std::vector<Vehicle> make_fleet(const ProfileTable& profiles, const std::vector<int>& plug_in_hours,
                                std::size_t horizon, const FleetConstants& constants) {
    if (plug_in_hours.size() != profiles.size()) throw std::invalid_argument("make_fleet: one plug-in hour per profile");
    std::vector<Vehicle> fleet;
    fleet.reserve(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& row = profiles.rows[i];
        Vehicle v;
        v.id = row.id;
        v.profile = HourlySeries(tile(row.miles, horizon), Unit::Miles);
        v.params = VehicleParams::for_kind(classify_vehicle(v.profile, constants.bev_mileage_threshold), constants);
        v.plug_in_hour = plug_in_hours[i];
        v.validate(horizon);
        fleet.push_back(std::move(v));
    }
    return fleet;
}

std::vector<Vehicle> sample_fleet(const SimContext& ctx, std::uint64_t run_seed) {
    const auto& cfg = ctx.config;
    const int count = ctx.scenario.fleet_size;
    ProfileTable profiles;
    if (ctx.fleet_pool) {
        std::mt19937_64 rng(derive_seed(run_seed, streams::kFleet));
        std::uniform_int_distribution<std::size_t> pick(0, ctx.fleet_pool->size() - 1);
        profiles.rows.reserve(count);
        for (int i = 0; i < count; ++i) {
            auto row = ctx.fleet_pool->rows[pick(rng)];
            row.id = "v" + std::to_string(i);
            profiles.rows.push_back(std::move(row));
        }
    } else {
        profiles = synth_fleet(count, ctx.archetypes, derive_seed(run_seed, streams::kFleet), cfg.synth);
    }

    std::mt19937_64 rng(derive_seed(run_seed, streams::kPlugIn));
    const int last = std::min<int>(cfg.plug_in_start + cfg.plug_in_window, static_cast<int>(ctx.scenario.horizon)) - 1;
    std::uniform_int_distribution<int> hour(cfg.plug_in_start, std::max(cfg.plug_in_start, last));
    std::vector<int> plug_in(profiles.size());
    for (auto& h : plug_in) h = hour(rng);
    return make_fleet(profiles, plug_in, ctx.scenario.horizon, ctx.scenario.constants);
}

RunMetrics compute_metrics(const Scenario& scenario, const std::vector<Vehicle>& fleet,
                           const std::vector<VehicleSchedule>& schedules, std::vector<std::int64_t>* fleet_units) {
    if (fleet.size() != schedules.size()) throw std::invalid_argument("compute_metrics: one schedule per vehicle");
    const std::size_t n = scenario.horizon;
    const double mean_p = scenario.elec_price.mean();
    const double mean_pg = scenario.gas_price.mean();

    RunMetrics m;
    std::vector<std::int64_t> units(n, 0);
    double demand = 0.0, supplied = 0.0, balance = 0.0, charge_kwh = 0.0, gen_kwh = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& v = fleet[i];
        const auto& s = schedules[i];
        const auto& vp = v.params;
        double sc = 0.0, sg = 0.0, e = 0.0;
        for (std::size_t h = 0; h < n; ++h) {
            units[h] += s.charge_units[h];
            const double pc = scenario.elec_price[h] * s.charge[h];
            const double pf = scenario.gas_price[h] * s.fuel[h];
            m.elec_cost += pc;
            m.gas_cost += pf;
            m.purchase_cost += pc + pf;
            sc += s.charge[h];
            sg += s.generate[h];
            e += vp.consumption * v.profile[h];
            m.miles += v.profile[h];
        }
        const double unmet = s.total_unmet();
        m.unmet_energy += unmet;
        m.demand_failures += static_cast<int>(s.failures.size());
        if (s.demand_failure()) ++m.failed_vehicles;
        charge_kwh += sc;
        gen_kwh += sg;

        const double s_final = s.storage.empty() ? vp.initial_storage : s.storage.back();
        const double sg_final = s.fuel_storage.empty() ? vp.initial_fuel : s.fuel_storage.back();
        // Energy drawn from the initial battery and tank is valued at the
        // average price of its source.
        if (vp.charge_efficiency > 0.0) m.elec_cost += (vp.initial_storage - s_final) / vp.charge_efficiency * mean_p;
        m.gas_cost += (vp.initial_fuel - sg_final) * mean_pg;

        supplied += vp.charge_efficiency * sc + vp.generation_efficiency * sg;
        demand += e;
        balance += e - unmet + (s_final - vp.initial_storage);
    }
    double base_peak = scenario.base_load.max();
    double peak = 0.0;
    m.max_cap_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < n; ++h) {
        const double load = energy_from_units(units[h]);
        peak = std::max(peak, scenario.base_load[h] + load);
        m.max_cap_excess = std::max(m.max_cap_excess, load - scenario.charge_cap[h]);
    }
    if (n == 0) m.max_cap_excess = 0.0;
    m.peak_increase_abs = peak - base_peak;
    m.peak_increase_pct = base_peak > 0.0 ? 100.0 * m.peak_increase_abs / base_peak : 0.0;
    m.grid_energy = charge_kwh / 1000.0;
    m.gasoline_energy = gen_kwh / 1000.0;
    m.total_cost = m.elec_cost + m.gas_cost;
    m.cost_per_mile = m.miles > 0.0 ? m.total_cost / m.miles : 0.0;
    m.energy_residual = std::abs(supplied - balance) / std::max(1.0, demand);
    if (fleet_units) *fleet_units = std::move(units);
    return m;
}

namespace {

std::vector<std::size_t> arrival_order(const std::vector<Vehicle>& fleet) {
    std::vector<std::size_t> order(fleet.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (fleet[a].plug_in_hour != fleet[b].plug_in_hour) return fleet[a].plug_in_hour < fleet[b].plug_in_hour;
        return fleet[a].id < fleet[b].id;
    });
    return order;
}

}  // namespace

RunResult run_fleet(const SimContext& ctx, const std::vector<Vehicle>& fleet, DispatcherKind dispatcher,
                    DispatchLog* log, bool keep_schedules) {
    const auto& sc = ctx.scenario;
    ChargeLedger ledger(sc.charge_cap);
    const auto order = arrival_order(fleet);

    std::vector<Vehicle> arrived;
    std::vector<VehicleSchedule> schedules;
    arrived.reserve(fleet.size());
    schedules.reserve(fleet.size());
    for (std::size_t i : order) {
        const auto& v = fleet[i];
        if (log) log->arrival(v, dispatcher);
        VehicleSchedule s;
        switch (dispatcher) {
            case DispatcherKind::CAP:
                s = dispatch_cap(v, ctx.prices, ctx.clusters, sc.elec_price, ledger);
                break;
            case DispatcherKind::Standard:
                s = dispatch_standard(v);
                break;
            case DispatcherKind::LowestCost:
                s = dispatch_lowest_cost(v, sc.elec_price);
                break;
            case DispatcherKind::PrimalPct:
                s = dispatch_primal_pct(v, ctx.ratios, ctx.clusters, sc.elec_price, ledger);
                break;
        }
        if (log) log->schedule(v, s);
        arrived.push_back(v);
        schedules.push_back(std::move(s));
    }

    RunResult r;
    r.dispatcher = dispatcher;
    r.metrics = compute_metrics(sc, arrived, schedules, &r.fleet_units);
    r.fleet_load.resize(sc.horizon);
    for (std::size_t h = 0; h < sc.horizon; ++h) r.fleet_load[h] = energy_from_units(r.fleet_units[h]);
    if (keep_schedules) r.schedules = std::move(schedules);
    return r;
}

RunResult run_scenario(const SimContext& ctx, DispatcherKind dispatcher, std::uint64_t run_seed) {
    return run_fleet(ctx, sample_fleet(ctx, run_seed), dispatcher);
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("EVDR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using MetricField = double RunMetrics::*;

const std::vector<MetricField>& double_fields() {
    static const std::vector<MetricField> f = {
        &RunMetrics::peak_increase_abs, &RunMetrics::peak_increase_pct, &RunMetrics::grid_energy,
        &RunMetrics::gasoline_energy,   &RunMetrics::total_cost,        &RunMetrics::elec_cost,
        &RunMetrics::gas_cost,          &RunMetrics::cost_per_mile,     &RunMetrics::unmet_energy,
        &RunMetrics::miles,             &RunMetrics::purchase_cost,     &RunMetrics::energy_residual,
        &RunMetrics::max_cap_excess};
    return f;
}

MetricSummary summarize(std::vector<RunMetrics> runs, const std::vector<std::vector<double>>& loads) {
    MetricSummary s;
    const double count = static_cast<double>(runs.size());
    if (runs.empty()) return s;
    for (auto f : double_fields()) {
        double sum = 0.0;
        for (const auto& r : runs) sum += r.*f;
        const double mean = sum / count;
        double var = 0.0;
        for (const auto& r : runs) var += (r.*f - mean) * (r.*f - mean);
        s.mean.*f = mean;
        s.stddev.*f = runs.size() > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;
    }
    // Integer counters: report the mean rounded toward zero in `mean`, the
    // total across runs is available from `runs`.
    long failures = 0, vehicles = 0;
    for (const auto& r : runs) {
        failures += r.demand_failures;
        vehicles += r.failed_vehicles;
    }
    s.mean.demand_failures = static_cast<int>(failures / static_cast<long>(runs.size()));
    s.mean.failed_vehicles = static_cast<int>(vehicles / static_cast<long>(runs.size()));

    if (!loads.empty()) {
        s.mean_load.assign(loads.front().size(), 0.0);
        for (const auto& l : loads)
            for (std::size_t h = 0; h < l.size(); ++h) s.mean_load[h] += l[h];
        for (auto& v : s.mean_load) v /= count;
    }
    s.runs = std::move(runs);
    return s;
}

}  // namespace

BatchResult run_batch(const SimContext& ctx, const std::vector<DispatcherKind>& dispatchers, int runs,
                      std::uint64_t seed, unsigned threads) {
    if (runs < 0) throw std::invalid_argument("run_batch: runs must be >= 0");
    if (threads == 0) threads = default_thread_count();
    threads = std::min<unsigned>(threads, std::max(1, runs));

    const std::size_t nd = dispatchers.size();
    std::vector<std::vector<RunMetrics>> metrics(nd, std::vector<RunMetrics>(runs));
    std::vector<std::vector<std::vector<double>>> loads(nd, std::vector<std::vector<double>>(runs));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;

    auto worker = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= runs) return;
            try {
                const auto fleet = sample_fleet(ctx, derive_seed(seed, streams::kFleet, static_cast<std::uint64_t>(r)));
                for (std::size_t d = 0; d < nd; ++d) {
                    auto res = run_fleet(ctx, fleet, dispatchers[d]);
                    metrics[d][r] = res.metrics;
                    loads[d][r] = std::move(res.fleet_load);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                next = runs;
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    BatchResult out;
    out.dispatchers = dispatchers;
    out.runs = runs;
    for (std::size_t d = 0; d < nd; ++d) out.summary[dispatchers[d]] = summarize(std::move(metrics[d]), loads[d]);
    return out;
}

MicroInstance three_hour_instance() {
    MicroInstance m;
    auto& sc = m.scenario;
    sc.horizon = 3;
    sc.base_load = HourlySeries::zeros(3, Unit::KW);
    sc.elec_price = HourlySeries({0.10, 0.12, 0.14}, Unit::DollarsPerKWh);
    sc.gas_price = flat_series(3, 3.90, Unit::DollarsPerGallon);
    sc.charge_cap = HourlySeries({0.3, 0.3, 0.3}, Unit::KWh);
    sc.fleet_size = 2;
    sc.validate();

    VehicleParams p;
    p.kind = VehicleKind::BEV;
    p.battery_capacity = 10.0;
    p.max_charge_rate = 1.0;
    p.charge_efficiency = 1.0;
    p.generation_efficiency = 1.0;
    p.initial_storage = 0.0;
    p.consumption = 0.3;

    const std::vector<std::vector<double>> trips = {{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}};
    for (std::size_t i = 0; i < trips.size(); ++i) {
        Vehicle v;
        v.id = "v" + std::to_string(i + 1);
        v.params = p;
        v.profile = HourlySeries(trips[i], Unit::Miles);
        v.plug_in_hour = 0;
        v.validate(3);
        m.fleet.push_back(v);

        m.clusters.centroids.push_back(trips[i]);
        m.clusters.kinds.push_back(VehicleKind::BEV);
        m.clusters.member_counts.push_back(1);
        m.clusters.weights.push_back(1.0);
        m.clusters.params.push_back(p);
        m.clusters.assignments.push_back(static_cast<int>(i));
    }
    m.clusters.training_size = 2;
    m.clusters.validate();
    return m;
}

MicroOutcome run_three_hour_example() {
    const auto m = three_hour_instance();
    const auto sol = lp::solve(lp::build_clp(m.clusters, m.scenario));
    if (sol.status != lp::LpStatus::Optimal) throw std::runtime_error("three-hour LP did not solve");

    MicroOutcome out;
    out.clp_objective = sol.objective;
    out.prices = compute_prices(sol, m.scenario, m.clusters);

    ChargeLedger greedy_ledger(m.scenario.charge_cap);
    for (const auto& v : m.fleet) out.lowest_cost.push_back(dispatch_lowest_cost(v, m.scenario.elec_price, &greedy_ledger));
    ChargeLedger cap_ledger(m.scenario.charge_cap);
    for (const auto& v : m.fleet)
        out.cap.push_back(dispatch_cap(v, out.prices, m.clusters, m.scenario.elec_price, cap_ledger));
    return out;
}

void write_comparison_csv(const BatchResult& batch, const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(10);
    out << "dispatcher,runs,peak_increase_kw,peak_increase_kw_sd,peak_increase_pct,grid_energy_mwh,"
           "gasoline_energy_mwh,total_cost,total_cost_sd,elec_cost,gas_cost,cost_per_mile,"
           "demand_failures_total,failed_vehicles_total,unmet_kwh,base_peak_kw\n";
    const double base_peak = scenario.base_load.max();
    for (auto kind : batch.dispatchers) {
        const auto& s = batch.summary.at(kind);
        long failures = 0, vehicles = 0;
        for (const auto& r : s.runs) {
            failures += r.demand_failures;
            vehicles += r.failed_vehicles;
        }
        out << to_string(kind) << ',' << batch.runs << ',' << s.mean.peak_increase_abs << ','
            << s.stddev.peak_increase_abs << ',' << s.mean.peak_increase_pct << ',' << s.mean.grid_energy << ','
            << s.mean.gasoline_energy << ',' << s.mean.total_cost << ',' << s.stddev.total_cost << ','
            << s.mean.elec_cost << ',' << s.mean.gas_cost << ',' << s.mean.cost_per_mile << ',' << failures << ','
            << vehicles << ',' << s.mean.unmet_energy << ',' << base_peak << '\n';
    }
}

void write_load_csv(const BatchResult& batch, DispatcherKind dispatcher, const Scenario& scenario,
                    const std::filesystem::path& path) {
    const auto& s = batch.summary.at(dispatcher);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(10);
    out << "hour,base_kw,fleet_kw,total_kw,cap_kwh\n";
    for (std::size_t h = 0; h < scenario.horizon; ++h) {
        const double fleet = h < s.mean_load.size() ? s.mean_load[h] : 0.0;
        out << h << ',' << scenario.base_load[h] << ',' << fleet << ',' << scenario.base_load[h] + fleet << ','
            << scenario.charge_cap[h] << '\n';
    }
}

}  // namespace evdr
