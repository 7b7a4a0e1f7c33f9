#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "evdr/clustering.hpp"

using namespace evdr;

namespace {

double sq(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Three tight BEV groups far apart plus one PHEV group.
ProfileTable blobs(std::vector<int>& truth) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> noise(-0.2, 0.2);
    const std::vector<std::pair<int, double>> centres = {{7, 10.0}, {12, 20.0}, {20, 15.0}, {8, 80.0}};
    ProfileTable t;
    for (int g = 0; g < 4; ++g) {
        for (int i = 0; i < 15; ++i) {
            ProfileRow r;
            r.id = "g" + std::to_string(g) + "_" + std::to_string(i);
            r.miles.assign(24, 0.0);
            r.miles[centres[g].first] = centres[g].second + noise(rng);
            t.rows.push_back(r);
            truth.push_back(g);
        }
    }
    return t;
}

}  // namespace

TEST(KMeans, RecoversSeparatedGroups) {
    std::vector<int> truth;
    const auto t = blobs(truth);
    const auto set = kmeans(t, 4, 3, 21);
    ASSERT_EQ(set.k(), 4u);
    std::map<int, std::set<int>> by_truth;
    for (std::size_t i = 0; i < t.size(); ++i) by_truth[truth[i]].insert(set.assignments[i]);
    std::set<int> used;
    for (const auto& [g, clusters] : by_truth) {
        EXPECT_EQ(clusters.size(), 1u) << "group " << g << " split";
        used.insert(*clusters.begin());
    }
    EXPECT_EQ(used.size(), 4u);
}

TEST(KMeans, KindsAreKeptApart) {
    const auto t = synth_fleet(300, default_archetypes(), 4);
    const auto set = kmeans(t, 8, 2, 1);
    set.validate();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto kind = t.rows[i].total() < 70.0 ? VehicleKind::BEV : VehicleKind::PHEV;
        EXPECT_EQ(set.kinds[set.assignments[i]], kind);
    }
    // BEV clusters come first.
    bool seen_phev = false;
    for (auto k : set.kinds) {
        if (k == VehicleKind::PHEV) seen_phev = true;
        else EXPECT_FALSE(seen_phev);
    }
}

TEST(KMeans, LloydFixedPointProperties) {
    const auto t = synth_fleet(250, default_archetypes(), 12);
    const auto set = kmeans(t, 7, 2, 5);
    // Centroids are member means, members sit at their nearest same-kind
    // centroid, and within_ss is the recomputed sum.
    std::vector<std::vector<double>> sums(set.k(), std::vector<double>(24, 0.0));
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const int c = set.assignments[i];
        for (int h = 0; h < 24; ++h) sums[c][h] += t.rows[i].miles[h];
        ss += sq(t.rows[i].miles, set.centroids[c]);
        for (std::size_t o = 0; o < set.k(); ++o)
            if (set.kinds[o] == set.kinds[c]) EXPECT_LE(sq(t.rows[i].miles, set.centroids[c]), sq(t.rows[i].miles, set.centroids[o]) + 1e-9);
    }
    for (std::size_t c = 0; c < set.k(); ++c)
        for (int h = 0; h < 24; ++h) EXPECT_NEAR(set.centroids[c][h], sums[c][h] / set.member_counts[c], 1e-9);
    EXPECT_NEAR(set.within_ss, ss, 1e-6 * (1.0 + ss));
}

TEST(KMeans, Deterministic) {
    const auto t = synth_fleet(150, default_archetypes(), 2);
    const auto a = kmeans(t, 5, 2, 77);
    const auto b = kmeans(t, 5, 2, 77);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, RejectsTooManyClusters) {
    ProfileTable t;
    for (int i = 0; i < 5; ++i) t.rows.push_back({"v" + std::to_string(i), std::vector<double>(24, 0.0)});
    EXPECT_THROW(kmeans(t, 2, 1, 1), std::invalid_argument);
    EXPECT_NO_THROW(kmeans(t, 1, 1, 1));
    EXPECT_THROW(kmeans(ProfileTable{}, 1, 1, 1), std::invalid_argument);
}

TEST(ClusterWeights, SumToFleet) {
    const auto t = synth_fleet(200, default_archetypes(), 6);
    const auto set = kmeans(t, 6, 1, 3);
    const auto w = cluster_weights(set, 10000);
    double s = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
        s += w[c];
        EXPECT_DOUBLE_EQ(w[c], 10000.0 * set.member_counts[c] / 200.0);
    }
    EXPECT_NEAR(s, 10000.0, 1e-9);
}

TEST(AssignCluster, NearestOfSameKindWithTies) {
    ClusterSet set;
    set.centroids = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
    set.kinds = {VehicleKind::BEV, VehicleKind::BEV, VehicleKind::PHEV};
    set.member_counts = {1, 1, 1};
    set.weights = {1, 1, 1};
    set.training_size = 3;
    EXPECT_EQ(assign_cluster({1.0, 0.0, 1.0, 0.0}, VehicleKind::BEV, set), 0);
    EXPECT_EQ(assign_cluster({0.5, 0.5, 0.5, 0.5}, VehicleKind::BEV, set), 0);
    EXPECT_EQ(assign_cluster({0.0, 1.0, 0.0, 1.0}, VehicleKind::BEV, set), 1);
    EXPECT_EQ(assign_cluster({0.0, 1.0}, VehicleKind::PHEV, set), 2);
    set.kinds[2] = VehicleKind::BEV;
    EXPECT_THROW(assign_cluster({0.0, 1.0}, VehicleKind::PHEV, set), std::invalid_argument);
}

TEST(ClusterSet, SaveLoadRoundTrip) {
    const auto t = synth_fleet(120, default_archetypes(), 9);
    auto set = kmeans(t, 5, 1, 4);
    set.weights = cluster_weights(set, 500);
    const auto p = std::filesystem::temp_directory_path() / "evdr_clusters_test.json";
    save_cluster_set(set, p);
    const auto back = load_cluster_set(p);
    EXPECT_EQ(back.centroids, set.centroids);
    EXPECT_EQ(back.kinds, set.kinds);
    EXPECT_EQ(back.member_counts, set.member_counts);
    EXPECT_EQ(back.weights, set.weights);
    EXPECT_EQ(back.assignments, set.assignments);
    for (std::size_t c = 0; c < set.k(); ++c) EXPECT_DOUBLE_EQ(back.params[c].battery_capacity, set.params[c].battery_capacity);
}

TEST(Valuation, IdenticalProfilesHitFloor) {
    ProfileTable t;
    for (int i = 0; i < 10; ++i) {
        ProfileRow r{"v" + std::to_string(i), std::vector<double>(24, 0.0)};
        r.miles[8] = 5.0;
        t.rows.push_back(r);
    }
    const auto curve = valuation_curve(t, 1, 1, 2, 3);
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_DOUBLE_EQ(curve[0].metric, kValuationFloor);
}

TEST(Valuation, CurveFallsWithK) {
    const auto t = synth_fleet(200, default_archetypes(), 31);
    const auto curve = valuation_curve(t, 2, 10, 2, 5);
    ASSERT_EQ(curve.size(), 9u);
    EXPECT_LT(curve.back().metric, curve.front().metric);
}

TEST(SelectK, FirstFlatPoint) {
    const std::vector<ValuationPoint> curve = {{1, 1.0}, {2, 0.6}, {3, 0.41}, {4, 0.40}, {5, 0.395}};
    EXPECT_EQ(select_k(curve, 0.02), 3);
    EXPECT_EQ(select_k(curve, 1.0), 1);
    EXPECT_THROW(select_k({}), std::invalid_argument);
}
