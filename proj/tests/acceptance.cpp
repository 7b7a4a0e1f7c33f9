// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <tuple>
#include <random>
#include <string>
#include <vector>

#include "evdr/config.hpp"
#include "evdr/lp/fleet_lp.hpp"
#include "evdr/lp/simplex.hpp"
#include "evdr/pricing.hpp"
#include "evdr/rng.hpp"
#include "evdr/sim.hpp"
#include "lp_checks.hpp"
#include "oracles/lp_oracles.hpp"
#include "oracles/random_clp.hpp"
#include "oracles/random_lp.hpp"

using namespace evdr;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

struct Verdict {
    std::string id;
    bool pass = false;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(const std::string& id, bool pass, const std::string& detail) {
    verdicts.push_back({id, pass, detail});
    std::printf("%s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

ScenarioConfig reference_config() {
    return load_config(std::filesystem::path(EVDR_SOURCE_DIR) / "configs" / "reference.conf");
}

double max_residual(const BatchResult& b) {
    double m = 0.0;
    for (const auto& [kind, s] : b.summary)
        for (const auto& r : s.runs) m = std::max(m, r.energy_residual);
    return m;
}

}  // namespace

int main() {
    const auto cfg = reference_config();
    std::printf("reference: %d vehicles, n=%zu, k=%d, %d runs, base peak %.0f kW, threads %u\n", cfg.fleet_size,
                cfg.horizon, cfg.clusters, cfg.runs, cfg.base_peak_kw, default_thread_count());
    std::fflush(stdout);

    // Reference batches: all dispatchers at alpha 1.0, CAP at alpha 0.75.
    const auto t_ref = Clock::now();
    auto cfg1 = cfg;
    cfg1.alpha = 1.0;
    const auto ctx1 = prepare_context(cfg1);
    const auto batch1 = run_batch(ctx1, all_dispatchers(), cfg.runs, cfg.seed);
    auto cfg075 = cfg;
    cfg075.alpha = 0.75;
    const auto ctx075 = prepare_context(cfg075);
    const auto batch075 = run_batch(ctx075, {DispatcherKind::CAP}, cfg.runs, cfg.seed);
    const double ref_seconds = seconds_since(t_ref);

    // AC1
    {
        int runs = 0, nonzero = 0;
        long failures = 0;
        double worst = 0.0;
        for (const auto* b : {&batch1, &batch075}) {
            for (const auto& r : b->summary.at(DispatcherKind::CAP).runs) {
                ++runs;
                if (r.peak_increase_abs != 0.0) ++nonzero;
                worst = std::max(worst, r.peak_increase_abs);
                failures += r.demand_failures;
            }
        }
        const bool pass = runs == 2 * cfg.runs && nonzero == 0 && ref_seconds <= 600.0;
        report("AC1", pass,
               fmt("cap safety: %d CAP runs at alpha 1.0 and 0.75, %d with a peak increase (max %.3g kW); "
                   "%.1f s for both batches incl. training and LPs (limit 600 s); CAP demand-failure events %ld",
                   runs, nonzero, worst, ref_seconds, failures));
    }

    const auto& cap1 = batch1.summary.at(DispatcherKind::CAP).mean;
    const auto& std1 = batch1.summary.at(DispatcherKind::Standard).mean;
    const auto& lc1 = batch1.summary.at(DispatcherKind::LowestCost).mean;
    const auto& pp1 = batch1.summary.at(DispatcherKind::PrimalPct).mean;

    // AC2
    {
        const double ratio = cap1.total_cost / std1.total_cost;
        const double spread = cfg.tariff.peak / cfg.tariff.off_peak;
        report("AC2", ratio <= 0.70,
               fmt("cost dominance: CAP $%.2f / Standard $%.2f = %.4f (limit 0.70); TOU peak/off-peak %.2f", cap1.total_cost,
                   std1.total_cost, ratio, spread));
    }

    // AC3
    {
        auto cfg_slack = cfg;
        cfg_slack.alpha = 2.0;
        const auto ctx = prepare_context(cfg_slack);
        const int runs = 20;
        const auto b = run_batch(ctx, {DispatcherKind::CAP, DispatcherKind::LowestCost}, runs, cfg.seed);
        int binding = 0;
        for (const auto& r : b.summary.at(DispatcherKind::LowestCost).runs) binding += r.max_cap_excess > 0.0;
        for (const auto& r : b.summary.at(DispatcherKind::CAP).runs) binding += r.max_cap_excess >= 0.0;
        const double cap = b.summary.at(DispatcherKind::CAP).mean.total_cost;
        const double lc = b.summary.at(DispatcherKind::LowestCost).mean.total_cost;
        const double gap = std::abs(cap - lc) / lc;
        report("AC3", binding == 0 && gap <= 0.01,
               fmt("slack cap (alpha 2.0, %d runs, %d runs where the cap was binding): CAP $%.2f vs Lowest-Cost $%.2f, "
                   "gap %.4f%% (limit 1%%)",
                   runs, binding, cap, lc, 100.0 * gap));
    }

    // AC4
    {
        const bool pass = std1.peak_increase_pct < lc1.peak_increase_pct && pp1.peak_increase_pct < std1.peak_increase_pct;
        report("AC4", pass,
               fmt("peak increase ordering: CAP %.4f%%, PrimalPct %.4f%%, Standard %.4f%%, Lowest-Cost %.4f%% "
                   "(need PrimalPct < Standard < Lowest-Cost)",
                   cap1.peak_increase_pct, pp1.peak_increase_pct, std1.peak_increase_pct, lc1.peak_increase_pct));
    }

    // AC5
    {
        const auto out = run_three_hour_example();
        const bool greedy_fails = !out.lowest_cost[0].demand_failure() && out.lowest_cost[1].demand_failure();
        const bool cap_ok = !out.cap[0].demand_failure() && !out.cap[1].demand_failure();
        const bool v1_hour2 = out.cap[0].charge[0] == 0.0 && std::abs(out.cap[0].charge[1] - 0.3) < 1e-12 &&
                              out.cap[0].charge[2] == 0.0;
        const bool v2_hour1 = std::abs(out.cap[1].charge[0] - 0.3) < 1e-12 && out.cap[1].charge[1] == 0.0 &&
                              out.cap[1].charge[2] == 0.0;
        report("AC5", greedy_fails && cap_ok && v1_hour2 && v2_hour1,
               fmt("three-hour example: greedy leaves vehicle 2 unserved: %s; CAP serves both: %s; "
                   "vehicle 1 in hour 2: %s; vehicle 2 in hour 1: %s",
                   greedy_fails ? "yes" : "no", cap_ok ? "yes" : "no", v1_hour2 ? "yes" : "no",
                   v2_hour1 ? "yes" : "no"));
    }

    // AC6
    {
        std::mt19937_64 rng(6);
        const auto t0 = Clock::now();
        int instances = 0, infeasible = 0, wrong = 0, max_cols = 0;
        double obj_err = 0.0, gap = 0.0, cs = 0.0, solver_seconds = 0.0;
        while (instances < 200) {
            const int n = 2 + static_cast<int>(rng() % 8);
            const int m = 1 + static_cast<int>(rng() % 6);
            const auto lp = oracle::random_bounded_lp(rng, n, m);
            ++instances;
            max_cols = std::max(max_cols, n);
            const auto ts = Clock::now();
            const auto r = lp::solve_simplex(lp);
            solver_seconds += seconds_since(ts);
            const auto ref = oracle::vertex_enumeration(lp);
            if (!ref) {
                ++infeasible;
                wrong += r.status != lp::LpStatus::Infeasible;
                continue;
            }
            if (r.status != lp::LpStatus::Optimal) {
                ++wrong;
                continue;
            }
            obj_err = std::max(obj_err, std::abs(r.objective - *ref));
            const auto k = testing_support::kkt_report(lp, r);
            gap = std::max(gap, std::abs(r.objective - k.dual_objective) / (1.0 + std::abs(r.objective)));
            cs = std::max(cs, k.complementarity);
            if (k.primal_violation > 1e-9 || k.dual_sign_violation > 1e-9 || k.reduced_cost_violation > 1e-9) ++wrong;
        }
        const double total = seconds_since(t0);
        report("AC6", wrong == 0 && obj_err <= 1e-6 && gap <= 1e-6 && cs <= 1e-8 && total <= 60.0,
               fmt("LP solver: %d random bounded LPs (2..%d columns, %d infeasible), %d with a wrong status "
                   "or a KKT violation; max |obj - vertex enumeration| %.2e; max relative duality gap %.2e; "
                   "max complementarity residual %.2e; %.2f s total (solver %.3f s)",
                   instances, max_cols, infeasible, wrong, obj_err, gap, cs, total, solver_seconds));
    }

    // AC7
    {
        std::mt19937_64 rng(7);
        int solved = 0, tries = 0;
        double parked_err = 0.0, total_err = 0.0;
        while (solved < 50 && tries < 1000) {
            ++tries;
            const auto inst = oracle::random_clp(rng, 1 + rng() % 3);
            const auto model = lp::build_clp(inst.set, inst.scenario);
            const auto sol = lp::solve(model);
            if (sol.status != lp::LpStatus::Optimal) continue;
            ++solved;
            const auto book = compute_prices(sol, inst.scenario, inst.set);
            const auto rc = oracle::basis_reduced_costs(model.program(), sol.raw.basis, sol.raw.row_kept);
            for (std::size_t l = 0; l < inst.set.k(); ++l) {
                const auto miles = tile(inst.set.centroids[l], inst.scenario.horizon);
                for (std::size_t h = 0; h < inst.scenario.horizon; ++h) {
                    const double ref = rc[model.column(l, h, lp::Family::Charge)];
                    total_err = std::max(total_err, std::abs(book.d[l][h] + book.eta[l][h] - ref));
                    if (miles[h] <= 0.0) parked_err = std::max(parked_err, std::abs(book.d[l][h] - ref));
                }
            }
        }
        report("AC7", solved == 50 && parked_err <= 1e-9 && total_err <= 1e-9,
               fmt("reduced-cost identity: %d random clustered LPs; parked hours max |d - rc| %.2e; "
                   "all hours max |d + eta - rc| %.2e (rc from an independent dense basis solve)",
                   solved, parked_err, total_err));
    }

    // AC8
    {
        int instances = 0, checks = 0, below = 0, skipped = 0;
        double worst = std::numeric_limits<double>::infinity();
        for (std::uint64_t i = 0; i < 20; ++i) {
            auto c = cfg;
            c.fleet_size = 20 + static_cast<int>(i % 4) * 10;
            c.horizon = 48;
            c.training_size = 150;
            c.clusters = 6;
            c.kmeans_restarts = 1;
            c.base_peak_kw = 6.0 * c.fleet_size;
            c.alpha = i % 2 ? 1.0 : 0.85;
            c.seed = 100 + i;
            const auto ctx = prepare_context(c);
            const auto fleet = sample_fleet(ctx, derive_seed(c.seed, streams::kFleet, 0));
            const auto capped = lp::solve(lp::build_full_lp(fleet, ctx.scenario, {true, true}));
            const auto free = lp::solve(lp::build_full_lp(fleet, ctx.scenario, {false, true}));
            if (free.status != lp::LpStatus::Optimal) {
                ++skipped;
                continue;
            }
            ++instances;
            for (auto kind : all_dispatchers()) {
                const auto m = run_fleet(ctx, fleet, kind).metrics;
                const bool respects_cap = kind == DispatcherKind::CAP || kind == DispatcherKind::PrimalPct;
                const double bound =
                    respects_cap && capped.status == lp::LpStatus::Optimal ? capped.objective : free.objective;
                ++checks;
                worst = std::min(worst, m.total_cost - bound);
                if (m.total_cost < bound - 1e-6) ++below;
            }
        }
        report("AC8", instances == 20 && below == 0,
               fmt("full-LP lower bound: %d instances of 20-50 vehicles (%d skipped), %d dispatcher runs, "
                   "%d below the bound; min realized cost - bound = $%.6f",
                   instances, skipped, checks, below, worst));
    }

    // AC9
    {
        const double r = std::max(max_residual(batch1), max_residual(batch075));
        int runs = 0;
        for (const auto* b : {&batch1, &batch075})
            for (const auto& [kind, s] : b->summary) runs += static_cast<int>(s.runs.size());
        report("AC9", r <= 1e-6,
               fmt("energy conservation: %d dispatcher runs, max relative residual %.2e (limit 1e-6)", runs, r));
    }

    // AC10
    {
        const auto fleet = sample_fleet(ctx1, derive_seed(cfg.seed, streams::kFleet, 0));
        std::vector<std::size_t> order(fleet.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(fleet[a].plug_in_hour, fleet[a].id) < std::tie(fleet[b].plug_in_hour, fleet[b].id);
        });
        ChargeLedger ledger(ctx1.scenario.charge_cap);
        double worst = 0.0, total = 0.0;
        for (std::size_t i : order) {
            const auto t0 = Clock::now();
            const auto s = dispatch_cap(fleet[i], ctx1.prices, ctx1.clusters, ctx1.scenario.elec_price, ledger);
            const double dt = seconds_since(t0);
            worst = std::max(worst, dt);
            total += dt;
        }
        const bool pass = ctx1.clusters.k() == 37 && ctx1.scenario.horizon == 120 && ctx1.clp_seconds <= 60.0 &&
                          worst <= 0.010;
        report("AC10", pass,
               fmt("performance: %zu-cluster %zu-hour CLP solved in %.2f s (limit 60 s); CAP dispatch over %zu "
                   "vehicles mean %.3f ms, max %.3f ms (limit 10 ms)",
                   ctx1.clusters.k(), ctx1.scenario.horizon, ctx1.clp_seconds, fleet.size(),
                   1e3 * total / static_cast<double>(fleet.size()), 1e3 * worst));
    }

    int failed = 0;
    for (const auto& v : verdicts) failed += !v.pass;
    std::printf("%zu criteria, %d failed\n", verdicts.size(), failed);
    return failed == 0 ? 0 : 1;
}
