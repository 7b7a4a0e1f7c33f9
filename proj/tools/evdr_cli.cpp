// evdr: fleet charging scenarios from the command line.

#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evdr/config.hpp"
#include "evdr/rng.hpp"
#include "evdr/sim.hpp"
#include "evdr/version.hpp"

namespace fs = std::filesystem;
using namespace evdr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitCapFailure = 2;

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<double> alpha;
    std::optional<int> fleet_size;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::string dispatchers;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ScenarioConfig resolve_config(const Options& o) {
    ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
    if (o.alpha) cfg.alpha = *o.alpha;
    if (o.fleet_size) cfg.fleet_size = *o.fleet_size;
    if (o.runs) cfg.runs = *o.runs;
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    return cfg;
}

std::vector<DispatcherKind> resolve_dispatchers(const Options& o, std::vector<DispatcherKind> fallback) {
    if (o.dispatchers.empty()) return fallback;
    std::vector<DispatcherKind> out;
    std::stringstream ss(o.dispatchers);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(dispatcher_from_string(item));
    if (out.empty()) throw InputError("--dispatchers: empty list");
    return out;
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

// Hash of everything that shapes the clusters and prices; the run count
// does not.
std::string artifact_hash(ScenarioConfig cfg) {
    cfg.runs = 1;
    return hex(fnv1a(cfg.to_text()));
}

void write_json(const nlohmann::json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("missing " + path.string());
    return nlohmann::json::parse(in);
}

void write_manifest(const fs::path& dir, const std::string& command, const ScenarioConfig& cfg,
                    const std::vector<std::string>& outputs) {
    nlohmann::json m;
    m["command"] = command;
    m["config_hash"] = hex(fnv1a(cfg.to_text()));
    m["artifact_hash"] = artifact_hash(cfg);
    m["seed"] = cfg.seed;
    m["config"] = cfg.to_text();
    m["outputs"] = outputs;
    m["versions"] = {{"evdr", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"cli11", CLI11_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__}};
    write_json(m, dir / "manifest.json");
}

fs::path prepare_out(const Options& o) {
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

void save_artifacts(const SimContext& ctx, const fs::path& dir) {
    save_cluster_set(ctx.clusters, dir / "clusters.json");
    save_price_book(ctx.prices, dir / "price_book.json");
    save_ratio_book(ctx.ratios, dir / "ratio_book.json");
    write_json({{"artifact_hash", artifact_hash(ctx.config)},
                {"clp_objective", ctx.clp_objective},
                {"k", ctx.clusters.k()},
                {"horizon", ctx.scenario.horizon}},
               dir / "artifacts.json");
}

// Load a context from cached artifacts; never re-solves.
SimContext load_context(const ScenarioConfig& cfg, const fs::path& dir) {
    const auto info = read_json(dir / "artifacts.json");
    if (info.at("artifact_hash").get<std::string>() != artifact_hash(cfg))
        throw InputError("artifacts in " + dir.string() + " were built from a different configuration; run `solve` again");
    SimContext ctx;
    ctx.config = cfg;
    ctx.scenario = make_scenario(cfg);
    ctx.archetypes = config_archetypes(cfg);
    if (!cfg.fleet_profiles_file.empty()) ctx.fleet_pool = load_profiles(cfg.fleet_profiles_file);
    ctx.clusters = load_cluster_set(dir / "clusters.json");
    ctx.prices = load_price_book(dir / "price_book.json");
    ctx.ratios = load_ratio_book(dir / "ratio_book.json");
    ctx.clp_objective = info.at("clp_objective");
    if (ctx.prices.k() != ctx.clusters.k() || ctx.ratios.k() != ctx.clusters.k() ||
        ctx.prices.horizon != ctx.scenario.horizon)
        throw InputError("cached artifacts disagree with each other or with the horizon");
    return ctx;
}

void print_table(const BatchResult& batch, const Scenario& sc) {
    std::printf("%-12s %14s %10s %12s %12s %14s %10s %9s\n", "dispatcher", "peak_inc_kW", "peak_inc_%", "grid_MWh",
                "gas_MWh", "total_cost_$", "$/mile", "failures");
    for (auto kind : batch.dispatchers) {
        const auto& s = batch.summary.at(kind);
        long failures = 0;
        for (const auto& r : s.runs) failures += r.demand_failures;
        std::printf("%-12s %14.4f %10.4f %12.4f %12.4f %14.2f %10.5f %9ld\n", to_string(kind).c_str(),
                    s.mean.peak_increase_abs, s.mean.peak_increase_pct, s.mean.grid_energy, s.mean.gasoline_energy,
                    s.mean.total_cost, s.mean.cost_per_mile, failures);
    }
    std::printf("base peak %.2f kW, %d runs\n", sc.base_load.max(), batch.runs);
}

int finish_batch(const BatchResult& batch, const SimContext& ctx, const fs::path& dir, const std::string& command) {
    std::vector<std::string> outputs = {"comparison.csv"};
    write_comparison_csv(batch, ctx.scenario, dir / "comparison.csv");
    for (auto kind : batch.dispatchers) {
        const std::string name = "loads_" + to_string(kind) + ".csv";
        write_load_csv(batch, kind, ctx.scenario, dir / name);
        outputs.push_back(name);
    }
    write_manifest(dir, command, ctx.config, outputs);
    print_table(batch, ctx.scenario);

    auto it = batch.summary.find(DispatcherKind::CAP);
    if (it != batch.summary.end()) {
        for (const auto& r : it->second.runs)
            if (r.demand_failures > 0) {
                std::fprintf(stderr, "CAP produced demand failures; the charge cap is too tight for this fleet\n");
                return kExitCapFailure;
            }
    }
    return kExitOk;
}

int cmd_synth(const Options& o) {
    const auto cfg = resolve_config(o);
    const auto dir = prepare_out(o);
    const auto sc = make_scenario(cfg);
    write_profiles(training_profiles(cfg), dir / "training_profiles.csv");
    SimContext ctx;
    ctx.config = cfg;
    ctx.scenario = sc;
    ctx.archetypes = config_archetypes(cfg);
    if (!cfg.fleet_profiles_file.empty()) ctx.fleet_pool = load_profiles(cfg.fleet_profiles_file);
    // Same draw as run 0 of a batch.
    const auto fleet = sample_fleet(ctx, derive_seed(cfg.seed, streams::kFleet, 0));
    ProfileTable table;
    std::ofstream plug(dir / "fleet_plug_in.csv");
    plug << "id,plug_in_hour,kind\n";
    for (const auto& v : fleet) {
        ProfileRow row;
        row.id = v.id;
        row.miles.assign(v.profile.values().begin(), v.profile.values().begin() + kHoursPerDay);
        table.rows.push_back(std::move(row));
        plug << v.id << ',' << v.plug_in_hour << ',' << to_string(v.params.kind) << '\n';
    }
    write_profiles(table, dir / "fleet_profiles.csv");
    write_series(sc.base_load, dir / "base_load.csv");
    write_series(sc.elec_price, dir / "elec_price.csv");
    write_series(sc.gas_price, dir / "gas_price.csv");
    write_series(sc.charge_cap, dir / "charge_cap.csv");
    write_manifest(dir, "synth", cfg,
                   {"training_profiles.csv", "fleet_profiles.csv", "fleet_plug_in.csv", "base_load.csv",
                    "elec_price.csv", "gas_price.csv", "charge_cap.csv"});
    std::printf("wrote synthetic inputs to %s\n", dir.string().c_str());
    return kExitOk;
}

int cmd_cluster(const Options& o) {
    const auto cfg = resolve_config(o);
    const auto dir = prepare_out(o);
    const auto set = train_clusters(cfg, training_profiles(cfg));
    save_cluster_set(set, dir / "clusters.json");
    write_manifest(dir, "cluster", cfg, {"clusters.json"});
    int bev = 0;
    for (auto k : set.kinds) bev += k == VehicleKind::BEV;
    std::printf("k=%zu (%d BEV, %zu PHEV) from %d profiles, within-cluster SS %.4f\n", set.k(), bev,
                set.k() - static_cast<std::size_t>(bev), set.training_size, set.within_ss);
    return kExitOk;
}

int cmd_solve(const Options& o) {
    const auto cfg = resolve_config(o);
    const auto dir = prepare_out(o);
    SimContext ctx;
    ctx.config = cfg;
    ctx.scenario = make_scenario(cfg);
    ctx.clusters = train_clusters(cfg, training_profiles(cfg));

    const auto model = lp::build_clp(ctx.clusters, ctx.scenario);
    const auto sol = lp::solve(model);
    if (sol.status != lp::LpStatus::Optimal) {
        std::fprintf(stderr, "clustered LP: %s\n", lp::to_string(sol.status).c_str());
        return kExitInput;
    }
    ctx.clp_objective = sol.objective;
    ctx.prices = compute_prices(sol, ctx.scenario, ctx.clusters);
    ctx.ratios = compute_ratios(sol, ctx.clusters);
    save_artifacts(ctx, dir);
    write_json({{"status", lp::to_string(sol.status)},
                {"objective", sol.objective},
                {"dual_objective", sol.dual_objective},
                {"iterations", sol.raw.iterations},
                {"phase1_iterations", sol.raw.phase1_iterations},
                {"rows", model.program().num_rows()},
                {"columns", model.program().num_columns()},
                {"theta", sol.theta}},
               dir / "lp_solution.json");
    write_manifest(dir, "solve", cfg,
                   {"clusters.json", "price_book.json", "ratio_book.json", "artifacts.json", "lp_solution.json"});
    std::printf("CLP: %zu rows x %zu columns, objective %.6f, dual objective %.6f, %ld iterations\n",
                static_cast<std::size_t>(model.program().num_rows()), static_cast<std::size_t>(model.program().num_columns()), sol.objective, sol.dual_objective,
                static_cast<long>(sol.raw.iterations));
    return kExitOk;
}

int cmd_prices(const Options& o) {
    const auto dir = fs::path(o.out);
    const auto book = load_price_book(dir / "price_book.json");
    std::ofstream out(dir / "prices.csv");
    if (!out) throw std::runtime_error("cannot write prices.csv");
    out << std::setprecision(10) << "hour";
    for (std::size_t l = 0; l < book.k(); ++l) out << ",d" << l;
    out << '\n';
    std::vector<std::vector<double>> norm;
    for (const auto& d : book.d) norm.push_back(normalize_for_report(d));
    for (std::size_t h = 0; h < book.horizon; ++h) {
        out << h;
        for (const auto& d : norm) out << ',' << d[h];
        out << '\n';
    }
    std::printf("wrote normalized adjusted prices for %zu clusters to %s\n", book.k(), (dir / "prices.csv").c_str());
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    const auto cfg = resolve_config(o);
    const auto kinds = resolve_dispatchers(o, {DispatcherKind::CAP});
    const auto dir = fs::path(o.out);
    const auto ctx = load_context(cfg, dir);
    const auto batch = run_batch(ctx, kinds, cfg.runs, cfg.seed);
    return finish_batch(batch, ctx, dir, "simulate");
}

int cmd_compare(const Options& o) {
    const auto cfg = resolve_config(o);
    const auto kinds = resolve_dispatchers(o, all_dispatchers());
    const auto dir = prepare_out(o);
    const auto ctx = prepare_context(cfg);
    save_artifacts(ctx, dir);
    const auto batch = run_batch(ctx, kinds, cfg.runs, cfg.seed);
    return finish_batch(batch, ctx, dir, "compare");
}

void print_schedule(const char* label, const VehicleSchedule& s) {
    std::printf("  %s %s: charge [", label, s.vehicle_id.c_str());
    for (std::size_t h = 0; h < s.charge.size(); ++h) std::printf("%s%.2f", h ? ", " : "", s.charge[h]);
    std::printf("]");
    if (s.demand_failure()) std::printf("  DEMAND FAILURE (%.2f kWh unmet)", s.total_unmet());
    std::printf("\n");
}

int cmd_example_3hour() {
    const auto inst = three_hour_instance();
    const auto out = run_three_hour_example();
    std::printf("Three hours, prices [0.10, 0.12, 0.14] $/kWh, fleet cap 0.3 kWh per hour.\n");
    std::printf("v1 drives in hour 3, v2 drives in hour 2; each needs 0.3 kWh and starts empty.\n\n");
    std::printf("Cheapest-hour greedy, first come first served:\n");
    for (const auto& s : out.lowest_cost) print_schedule("", s);
    std::printf("\nClustered LP optimum %.4f $. Adjusted prices d:\n", out.clp_objective);
    for (std::size_t l = 0; l < out.prices.k(); ++l) {
        std::printf("  %s: [", inst.fleet[l].id.c_str());
        for (std::size_t h = 0; h < out.prices.horizon; ++h) std::printf("%s%.4f", h ? ", " : "", out.prices.d[l][h]);
        std::printf("]\n");
    }
    std::printf("\nCAP, same arrival order:\n");
    for (const auto& s : out.cap) print_schedule("", s);
    bool ok = true;
    for (const auto& s : out.cap) ok = ok && !s.demand_failure();
    return ok ? kExitOk : kExitCapFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Demand-response charging for electric vehicle fleets"};
    app.require_subcommand(1);
    app.footer("Environment: EVDR_THREADS sets the number of worker threads for batches (default: all cores).\n"
               "Exit codes: 0 success, 1 input error, 2 demand failure under CAP.");

    Options o;
    auto add_common = [&](CLI::App* sub, bool scenario_flags) {
        sub->add_option("--config", o.config, "scenario config file (key = value)")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        if (!scenario_flags) return;
        sub->add_option("--alpha", o.alpha, "cap as a fraction of the daily base peak");
        sub->add_option("--fleet-size", o.fleet_size, "vehicles per run");
        sub->add_option("--runs", o.runs, "independent fleets per batch");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--dispatchers", o.dispatchers, "comma list of cap, standard, lowest_cost, primal_pct");
    };

    auto* synth = app.add_subcommand("synth", "write synthetic profiles, loads and prices");
    auto* cluster = app.add_subcommand("cluster", "cluster training profiles into base driving profiles");
    auto* solve = app.add_subcommand("solve", "cluster, solve the clustered LP and cache prices");
    auto* prices = app.add_subcommand("prices", "export normalized adjusted prices from the cache");
    auto* simulate = app.add_subcommand("simulate", "run a batch from cached prices (never re-solves)");
    auto* compare = app.add_subcommand("compare", "full pipeline over all dispatchers");
    auto* example = app.add_subcommand("example-3hour", "two vehicles, three hours: greedy failure vs CAP");
    for (auto* sub : {synth, cluster, solve, simulate, compare}) add_common(sub, true);
    add_common(prices, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*synth) return cmd_synth(o);
        if (*cluster) return cmd_cluster(o);
        if (*solve) return cmd_solve(o);
        if (*prices) return cmd_prices(o);
        if (*simulate) return cmd_simulate(o);
        if (*compare) return cmd_compare(o);
        if (*example) return cmd_example_3hour();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitInput;
}
