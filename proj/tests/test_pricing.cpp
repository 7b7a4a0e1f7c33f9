#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "evdr/lp/fleet_lp.hpp"
#include "evdr/pricing.hpp"
#include "evdr/sim.hpp"
#include "helpers.hpp"
#include "oracles/lp_oracles.hpp"
#include "oracles/random_clp.hpp"

using namespace evdr;

namespace {

struct Solved {
    oracle::RandomClp inst;
    lp::LpSolution sol;
    PriceBook book;
};

// Random instances that solve to optimality; the rest are skipped.
std::vector<Solved> solved_instances(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::vector<Solved> out;
    for (int tries = 0; tries < 10 * count && static_cast<int>(out.size()) < count; ++tries) {
        Solved s;
        s.inst = oracle::random_clp(rng);
        s.sol = lp::solve(lp::build_clp(s.inst.set, s.inst.scenario));
        if (s.sol.status != lp::LpStatus::Optimal) continue;
        s.book = compute_prices(s.sol, s.inst.scenario, s.inst.set);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST(Prices, ThreeHourArgminPattern) {
    const auto out = run_three_hour_example();
    const auto& d = out.prices.d;
    ASSERT_EQ(d.size(), 2u);
    // The optimum is degenerate, so d may tie; the preferred hour must be
    // among the minimizers and first in the induced CAP order.
    auto minimizes = [](const std::vector<double>& v, std::size_t h) {
        return v[h] <= *std::min_element(v.begin(), v.end()) + 1e-12;
    };
    // Vehicle 1 prefers the middle hour, vehicle 2 the first.
    EXPECT_TRUE(minimizes(d[0], 1));
    EXPECT_TRUE(minimizes(d[1], 0));
    EXPECT_FALSE(minimizes(d[0], 2));
    EXPECT_FALSE(minimizes(d[1], 1));
    const auto inst = three_hour_instance();
    EXPECT_EQ(cap_hour_order(out.prices, 0, inst.scenario.elec_price).front(), 1u);
    EXPECT_EQ(cap_hour_order(out.prices, 1, inst.scenario.elec_price).front(), 0u);
    EXPECT_NEAR(out.clp_objective, 0.3 * 0.10 + 0.3 * 0.12, 1e-12);
}

TEST(Prices, EqualOracleReducedCostsOnParkedHours) {
    const auto all = solved_instances(101, 25);
    ASSERT_GE(all.size(), 20u);
    for (const auto& s : all) {
        const auto& lp = s.sol.raw;
        const auto model = lp::build_clp(s.inst.set, s.inst.scenario);
        const auto rc = oracle::basis_reduced_costs(model.program(), lp.basis, lp.row_kept);
        for (std::size_t l = 0; l < s.inst.set.k(); ++l) {
            const auto miles = tile(s.inst.set.centroids[l], s.inst.scenario.horizon);
            for (std::size_t h = 0; h < s.inst.scenario.horizon; ++h) {
                const double ref = rc[model.column(l, h, lp::Family::Charge)];
                EXPECT_NEAR(s.sol.blocks[l].charge_reduced_cost[h], ref, 1e-9);
                EXPECT_NEAR(s.book.d[l][h] + s.book.eta[l][h], ref, 1e-9);
                if (miles[h] <= 0.0) {
                    EXPECT_NEAR(s.book.d[l][h], ref, 1e-9);
                    EXPECT_EQ(s.book.eta[l][h], 0.0);
                }
            }
        }
    }
}

TEST(Prices, MatchesMultiplierFormula) {
    // rc = b p - c_eff lambda - b theta on every hour.
    for (const auto& s : solved_instances(7, 10)) {
        for (std::size_t l = 0; l < s.inst.set.k(); ++l) {
            const double b = s.inst.set.weights[l];
            const double ce = s.inst.set.params[l].charge_efficiency;
            for (std::size_t h = 0; h < s.inst.scenario.horizon; ++h) {
                const double f = b * s.inst.scenario.elec_price[h] - ce * s.sol.blocks[l].lambda_s[h] - b * s.sol.theta[h];
                EXPECT_NEAR(s.sol.blocks[l].charge_reduced_cost[h], f, 1e-9);
            }
        }
    }
}

TEST(Prices, DrivingHoursNeverCheapest) {
    for (const auto& s : solved_instances(13, 20)) {
        for (std::size_t l = 0; l < s.inst.set.k(); ++l) {
            const auto miles = tile(s.inst.set.centroids[l], s.inst.scenario.horizon);
            double parked = std::numeric_limits<double>::infinity(), driving = parked;
            for (std::size_t h = 0; h < miles.size(); ++h) {
                double& low = miles[h] > 0.0 ? driving : parked;
                low = std::min(low, s.book.d[l][h]);
            }
            if (std::isfinite(parked) && std::isfinite(driving)) EXPECT_GT(driving, parked);
        }
    }
}

TEST(Prices, SignDichotomyOnParkedHours) {
    for (const auto& s : solved_instances(17, 20)) {
        for (std::size_t l = 0; l < s.inst.set.k(); ++l) {
            const auto miles = tile(s.inst.set.centroids[l], s.inst.scenario.horizon);
            const double cbar = s.inst.set.params[l].max_charge_rate;
            for (std::size_t h = 0; h < miles.size(); ++h) {
                if (miles[h] > 0.0) continue;
                const double d = s.book.d[l][h], c = s.sol.blocks[l].charge[h];
                if (d > 1e-7) EXPECT_NEAR(c, 0.0, 1e-9);
                if (d < -1e-7) EXPECT_NEAR(c, cbar, 1e-9);
            }
        }
    }
}

TEST(Prices, ScaleWithObjective) {
    std::mt19937_64 rng(23);
    int checked = 0;
    for (int t = 0; t < 30 && checked < 10; ++t) {
        auto inst = oracle::random_clp(rng);
        const auto a = lp::solve(lp::build_clp(inst.set, inst.scenario));
        if (a.status != lp::LpStatus::Optimal) continue;
        auto scaled = inst.scenario;
        std::vector<double> p = scaled.elec_price.values(), g = scaled.gas_price.values();
        for (auto& v : p) v *= 4.0;
        for (auto& v : g) v *= 4.0;
        scaled.elec_price = HourlySeries(p, Unit::DollarsPerKWh);
        scaled.gas_price = HourlySeries(g, Unit::DollarsPerGallon);
        const auto b = lp::solve(lp::build_clp(inst.set, scaled));
        ASSERT_EQ(b.status, lp::LpStatus::Optimal);
        const auto da = compute_prices(a, inst.scenario, inst.set);
        const auto db = compute_prices(b, scaled, inst.set);
        for (std::size_t l = 0; l < inst.set.k(); ++l)
            for (std::size_t h = 0; h < inst.scenario.horizon; ++h)
                EXPECT_NEAR(db.d[l][h], 4.0 * da.d[l][h], 1e-8 * (1.0 + std::abs(db.d[l][h])));
        ++checked;
    }
    EXPECT_EQ(checked, 10);
}

TEST(Prices, SlackCapAndNoDrivingGiveRawPrice) {
    auto p = testing_support::bev(10.0, 3.0, 5.0);
    ClusterSet set;
    set.centroids = {std::vector<double>(24, 0.0)};
    set.kinds = {VehicleKind::BEV};
    set.member_counts = {1};
    set.weights = {1.0};
    set.params = {p};
    set.assignments = {0};
    set.training_size = 1;
    auto sc = testing_support::flat_scenario(24, tou_prices(24, {}).values(), 100.0);
    const auto sol = lp::solve(lp::build_clp(set, sc));
    ASSERT_EQ(sol.status, lp::LpStatus::Optimal);
    const auto book = compute_prices(sol, sc, set);
    for (std::size_t h = 0; h < 24; ++h) EXPECT_NEAR(book.d[0][h], sc.elec_price[h], 1e-12);
}

TEST(Prices, RejectsNonOptimal) {
    lp::LpSolution sol;
    sol.status = lp::LpStatus::Infeasible;
    EXPECT_THROW(compute_prices(sol, Scenario{}, ClusterSet{}), std::invalid_argument);
    EXPECT_THROW(compute_ratios(sol, ClusterSet{}), std::invalid_argument);
}

TEST(Ratios, SumToOneOrZero) {
    for (const auto& s : solved_instances(29, 15)) {
        const auto r = compute_ratios(s.sol, s.inst.set);
        for (std::size_t l = 0; l < r.k(); ++l) {
            for (const auto* series : {&r.charge[l], &r.generate[l], &r.fuel[l]}) {
                double sum = 0.0;
                for (double v : *series) {
                    EXPECT_GE(v, 0.0);
                    sum += v;
                }
                EXPECT_TRUE(sum == 0.0 || sum == 1.0) << sum;
            }
            const double shares = r.share_charge[l] + r.share_generate[l] + r.share_fuel[l];
            EXPECT_TRUE(shares == 0.0 || std::abs(shares - 1.0) < 1e-12);
            if (s.inst.set.kinds[l] == VehicleKind::BEV) {
                EXPECT_EQ(r.share_fuel[l], 0.0);
                EXPECT_EQ(r.share_generate[l], 0.0);
            }
        }
    }
}

TEST(Ratios, SingleChargingHourIsUnitVector) {
    auto p = testing_support::bev(10.0, 3.0, 0.0);
    ClusterSet set;
    std::vector<double> day(24, 0.0);
    day[8] = 1.0;
    set.centroids = {day};
    set.kinds = {VehicleKind::BEV};
    set.member_counts = {1};
    set.weights = {1.0};
    set.params = {p};
    set.assignments = {0};
    set.training_size = 1;
    std::vector<double> price(24, 0.3);
    price[5] = 0.05;
    auto sc = testing_support::flat_scenario(24, price, 100.0);
    const auto sol = lp::solve(lp::build_clp(set, sc));
    ASSERT_EQ(sol.status, lp::LpStatus::Optimal);
    const auto r = compute_ratios(sol, set);
    for (std::size_t h = 0; h < 24; ++h) EXPECT_EQ(r.charge[0][h], h == 5 ? 1.0 : 0.0);
    for (double v : r.fuel[0]) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(r.share_fuel[0], 0.0);
    EXPECT_EQ(r.share_charge[0], 1.0);
}

TEST(Fractions, ExactSum) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> v(1 + rng() % 120);
        for (auto& x : v) x = u(rng) < 0.3 ? 0.0 : u(rng) * 1e3;
        const auto f = to_fractions(v);
        double s = 0.0;
        for (double x : f) s += x;
        const bool any = std::any_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
        EXPECT_EQ(s, any ? 1.0 : 0.0);
    }
    EXPECT_THROW(to_fractions({-1.0}), std::invalid_argument);
}

TEST(Normalize, MaxElement) {
    EXPECT_EQ(normalize_for_report({2.0, 4.0}), (std::vector<double>{0.5, 1.0}));
    EXPECT_EQ(normalize_for_report({0.0, 0.0}), (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(normalize_for_report({-4.0, 2.0}), (std::vector<double>{-1.0, 0.5}));
}

TEST(PriceBook, JsonRoundTrip) {
    const auto all = solved_instances(41, 1);
    ASSERT_EQ(all.size(), 1u);
    const auto dir = std::filesystem::temp_directory_path();
    save_price_book(all[0].book, dir / "evdr_prices.json");
    const auto back = load_price_book(dir / "evdr_prices.json");
    EXPECT_EQ(back.d, all[0].book.d);
    EXPECT_EQ(back.eta, all[0].book.eta);
    EXPECT_EQ(back.lp_charge, all[0].book.lp_charge);

    const auto ratios = compute_ratios(all[0].sol, all[0].inst.set);
    save_ratio_book(ratios, dir / "evdr_ratios.json");
    const auto rb = load_ratio_book(dir / "evdr_ratios.json");
    EXPECT_EQ(rb.charge, ratios.charge);
    EXPECT_EQ(rb.share_charge, ratios.share_charge);
}
