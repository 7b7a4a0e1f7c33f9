#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "evdr/core_model.hpp"
#include "evdr/ingest.hpp"

namespace evdr {

/// Base driving profiles: k centroids with the kind, size, weight and shared
/// vehicle parameters of each cluster.
struct ClusterSet {
    std::vector<std::vector<double>> centroids;  // daily miles, one per cluster
    std::vector<VehicleKind> kinds;
    std::vector<int> member_counts;
    std::vector<double> weights;  // b_l
    std::vector<VehicleParams> params;
    std::vector<int> assignments;  // training row -> cluster
    int training_size = 0;
    double within_ss = 0.0;  // sum of squared member-to-centroid distances

    [[nodiscard]] std::size_t k() const noexcept { return centroids.size(); }
    void validate() const;
};

/// Lloyd's k-means with k-means++ seeding, Euclidean distance, best of
/// `restarts`. BEV and PHEV rows are clustered separately with k split in
/// proportion to their counts; the results are concatenated BEV first.
ClusterSet kmeans(const ProfileTable& profiles, int k, int restarts, std::uint64_t seed,
                  const FleetConstants& constants = {});

inline constexpr double kValuationFloor = -9.0;  // log10(1e-9)

struct ValuationPoint {
    int k = 0;
    double metric = 0.0;  // log10 of the mean over runs of the overall-cluster mean distance
};

std::vector<ValuationPoint> valuation_curve(const ProfileTable& profiles, int k_min, int k_max, int runs,
                                            std::uint64_t seed, const FleetConstants& constants = {},
                                            double sample_fraction = 1.0);

/// Smallest k whose metric is within `flatten_tol` of every later metric.
int select_k(const std::vector<ValuationPoint>& curve, double flatten_tol = 0.02);

/// b_l = member share of the training sample times the fleet size.
std::vector<double> cluster_weights(const ClusterSet& set, int fleet_size);

/// Nearest centroid of the same kind (the centroid is tiled to the profile
/// length); ties go to the lowest index.
int assign_cluster(const std::vector<double>& profile, VehicleKind kind, const ClusterSet& set);

void save_cluster_set(const ClusterSet& set, const std::filesystem::path& path);
ClusterSet load_cluster_set(const std::filesystem::path& path);

}  // namespace evdr
