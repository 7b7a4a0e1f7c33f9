#include "evdr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "evdr/rng.hpp"
#include "json.hpp"

namespace evdr {
namespace {

using Point = std::vector<double>;

double squared_distance(const Point& a, const Point& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

std::size_t count_distinct(const std::vector<const Point*>& points) {
    std::set<Point> seen;
    for (const Point* p : points) seen.insert(*p);
    return seen.size();
}

struct LloydResult {
    std::vector<Point> centroids;
    std::vector<int> assignment;
    double within_ss = std::numeric_limits<double>::infinity();
};

int nearest(const Point& p, const std::vector<Point>& centroids) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<Point> seed_plus_plus(const std::vector<const Point*>& points, int k, std::mt19937_64& rng) {
    std::vector<Point> centroids;
    std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
    centroids.push_back(*points[first(rng)]);
    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(*points[i], centroids[0]);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(centroids.size()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = unit(rng) * total;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (d2[i] <= 0.0) continue;
                if (r < d2[i]) {
                    pick = i;
                    break;
                }
                r -= d2[i];
            }
            if (d2[pick] <= 0.0) {
                // Rounding fell off the end; take the last point not yet chosen.
                for (std::size_t i = points.size(); i-- > 0;)
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        }
        centroids.push_back(*points[pick]);
        for (std::size_t i = 0; i < points.size(); ++i)
            d2[i] = std::min(d2[i], squared_distance(*points[i], centroids.back()));
    }
    return centroids;
}

LloydResult lloyd(const std::vector<const Point*>& points, int k, std::mt19937_64& rng) {
    constexpr int kMaxIterations = 300;
    const std::size_t dim = points.front()->size();
    LloydResult res;
    res.centroids = seed_plus_plus(points, k, rng);
    res.assignment.assign(points.size(), -1);

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const int c = nearest(*points[i], res.centroids);
            if (c != res.assignment[i]) {
                res.assignment[i] = c;
                changed = true;
            }
        }

        std::vector<int> counts(k, 0);
        for (int c : res.assignment) ++counts[c];
        // Reseed an empty cluster with the point farthest from its centroid.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (counts[res.assignment[i]] <= 1) continue;
                const double d = squared_distance(*points[i], res.centroids[res.assignment[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[res.assignment[far]];
            res.assignment[far] = c;
            counts[c] = 1;
            changed = true;
        }

        std::vector<Point> sums(k, Point(dim, 0.0));
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto& s = sums[res.assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += (*points[i])[d];
        }
        for (int c = 0; c < k; ++c)
            for (std::size_t d = 0; d < dim; ++d) res.centroids[c][d] = sums[c][d] / counts[c];

        if (!changed) break;
    }

    res.within_ss = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        res.within_ss += squared_distance(*points[i], res.centroids[res.assignment[i]]);
    return res;
}

LloydResult best_of(const std::vector<const Point*>& points, int k, int restarts, std::uint64_t seed) {
    LloydResult best;
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(derive_seed(seed, streams::kKMeans, static_cast<std::uint64_t>(r)));
        auto res = lloyd(points, k, rng);
        if (res.within_ss < best.within_ss) best = std::move(res);
    }
    return best;
}

// Largest-remainder split of k between the kinds, capped by distinct counts.
std::pair<int, int> split_k(int k, std::size_t n_bev, std::size_t n_phev, std::size_t distinct_bev,
                            std::size_t distinct_phev) {
    const std::size_t total = n_bev + n_phev;
    int k_bev = static_cast<int>(std::lround(static_cast<double>(k) * n_bev / total));
    if (n_bev > 0) k_bev = std::max(k_bev, 1);
    if (n_phev > 0) k_bev = std::min(k_bev, k - 1);
    if (n_bev == 0) k_bev = 0;
    int k_phev = k - k_bev;
    if (k_bev > static_cast<int>(distinct_bev)) {
        k_phev += k_bev - static_cast<int>(distinct_bev);
        k_bev = static_cast<int>(distinct_bev);
    }
    if (k_phev > static_cast<int>(distinct_phev)) {
        k_bev += k_phev - static_cast<int>(distinct_phev);
        k_phev = static_cast<int>(distinct_phev);
    }
    return {k_bev, k_phev};
}

}  // namespace

void ClusterSet::validate() const {
    const std::size_t n = centroids.size();
    if (kinds.size() != n || member_counts.size() != n || weights.size() != n || params.size() != n)
        throw std::invalid_argument("cluster set fields disagree on k");
    int members = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (centroids[c].size() != centroids.front().size())
            throw std::invalid_argument("cluster centroids differ in length");
        if (member_counts[c] < 1) throw std::invalid_argument("empty cluster");
        if (!(weights[c] > 0.0)) throw std::invalid_argument("cluster weights must be positive");
        if (params[c].kind != kinds[c]) throw std::invalid_argument("cluster params disagree with cluster kind");
        params[c].validate();
        members += member_counts[c];
    }
    if (members != training_size) throw std::invalid_argument("member counts do not sum to the training size");
}

ClusterSet kmeans(const ProfileTable& profiles, int k, int restarts, std::uint64_t seed,
                  const FleetConstants& constants) {
    if (profiles.empty()) throw std::invalid_argument("kmeans: no profiles");
    if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be at least 1");
    const std::size_t dim = profiles.rows.front().miles.size();
    for (const auto& row : profiles.rows)
        if (row.miles.size() != dim) throw std::invalid_argument("kmeans: profiles differ in length");

    std::vector<std::size_t> bev_rows, phev_rows;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto kind = profiles.rows[i].total() < constants.bev_mileage_threshold ? VehicleKind::BEV
                                                                                     : VehicleKind::PHEV;
        (kind == VehicleKind::BEV ? bev_rows : phev_rows).push_back(i);
    }

    auto gather = [&](const std::vector<std::size_t>& rows) {
        std::vector<const Point*> pts;
        pts.reserve(rows.size());
        for (std::size_t i : rows) pts.push_back(&profiles.rows[i].miles);
        return pts;
    };

    ClusterSet set;
    set.training_size = static_cast<int>(profiles.size());
    set.assignments.assign(profiles.size(), -1);

    auto append = [&](const std::vector<std::size_t>& rows, int k_part, VehicleKind kind, std::uint64_t part_seed) {
        if (k_part == 0) return;
        const auto pts = gather(rows);
        auto res = best_of(pts, k_part, restarts, part_seed);
        const int offset = static_cast<int>(set.k());
        std::vector<int> counts(k_part, 0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            set.assignments[rows[i]] = offset + res.assignment[i];
            ++counts[res.assignment[i]];
        }
        for (int c = 0; c < k_part; ++c) {
            set.centroids.push_back(res.centroids[c]);
            set.kinds.push_back(kind);
            set.member_counts.push_back(counts[c]);
            set.weights.push_back(static_cast<double>(counts[c]));
            set.params.push_back(VehicleParams::for_kind(kind, constants));
        }
        set.within_ss += res.within_ss;
    };

    const int kinds_present = (bev_rows.empty() ? 0 : 1) + (phev_rows.empty() ? 0 : 1);
    if (k < kinds_present) {
        // Too few clusters to keep the kinds apart: pool them under the majority kind.
        std::vector<std::size_t> all(profiles.size());
        std::iota(all.begin(), all.end(), 0);
        const auto kind = bev_rows.size() > phev_rows.size() ? VehicleKind::BEV : VehicleKind::PHEV;
        append(all, k, kind, seed);
        return set;
    }

    const std::size_t distinct_bev = count_distinct(gather(bev_rows));
    const std::size_t distinct_phev = count_distinct(gather(phev_rows));
    if (static_cast<std::size_t>(k) > distinct_bev + distinct_phev) {
        throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds the distinct profiles available; at most " +
                                    std::to_string(distinct_bev + distinct_phev) + " clusters can be formed (" +
                                    std::to_string(distinct_bev) + " BEV, " + std::to_string(distinct_phev) + " PHEV)");
    }
    const auto [k_bev, k_phev] = split_k(k, bev_rows.size(), phev_rows.size(), distinct_bev, distinct_phev);
    append(bev_rows, k_bev, VehicleKind::BEV, derive_seed(seed, 1));
    append(phev_rows, k_phev, VehicleKind::PHEV, derive_seed(seed, 2));
    return set;
}

std::vector<ValuationPoint> valuation_curve(const ProfileTable& profiles, int k_min, int k_max, int runs,
                                            std::uint64_t seed, const FleetConstants& constants,
                                            double sample_fraction) {
    if (runs < 1) throw std::invalid_argument("valuation_curve: runs must be at least 1");
    if (k_min < 1 || k_max < k_min) throw std::invalid_argument("valuation_curve: bad k range");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw std::invalid_argument("valuation_curve: sample_fraction must be in (0, 1]");

    const std::size_t sample_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(sample_fraction * profiles.size())));
    std::vector<ValuationPoint> curve;
    for (int k = k_min; k <= k_max; ++k) {
        double run_sum = 0.0;
        for (int r = 0; r < runs; ++r) {
            std::mt19937_64 rng(derive_seed(seed, streams::kValuation, static_cast<std::uint64_t>(r)));
            std::vector<std::size_t> order(profiles.size());
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            ProfileTable sample;
            for (std::size_t i = 0; i < sample_size; ++i) sample.rows.push_back(profiles.rows[order[i]]);

            const auto set = kmeans(sample, k, 1, derive_seed(seed, static_cast<std::uint64_t>(k), r), constants);
            std::vector<double> dist_sum(set.k(), 0.0);
            for (std::size_t i = 0; i < sample.size(); ++i) {
                const int c = set.assignments[i];
                dist_sum[c] += std::sqrt(squared_distance(sample.rows[i].miles, set.centroids[c]));
            }
            double overall = 0.0;
            for (std::size_t c = 0; c < set.k(); ++c) overall += dist_sum[c] / set.member_counts[c];
            run_sum += overall / static_cast<double>(set.k());
        }
        const double mean = run_sum / runs;
        curve.push_back({k, mean > 1e-9 ? std::log10(mean) : kValuationFloor});
    }
    return curve;
}

int select_k(const std::vector<ValuationPoint>& curve, double flatten_tol) {
    if (curve.empty()) throw std::invalid_argument("select_k: empty curve");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        bool flat = true;
        for (std::size_t j = i + 1; j < curve.size() && flat; ++j)
            flat = curve[i].metric - curve[j].metric < flatten_tol;
        if (flat) return curve[i].k;
    }
    return curve.back().k;
}

std::vector<double> cluster_weights(const ClusterSet& set, int fleet_size) {
    if (fleet_size <= 0) throw std::invalid_argument("cluster_weights: fleet_size must be positive");
    if (set.training_size <= 0) throw std::invalid_argument("cluster_weights: empty training sample");
    std::vector<double> b(set.k());
    for (std::size_t c = 0; c < set.k(); ++c) {
        if (set.member_counts[c] <= 0) throw std::invalid_argument("cluster_weights: empty cluster");
        b[c] = static_cast<double>(set.member_counts[c]) / set.training_size * fleet_size;
    }
    return b;
}

int assign_cluster(const std::vector<double>& profile, VehicleKind kind, const ClusterSet& set) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < set.k(); ++c) {
        if (set.kinds[c] != kind) continue;
        const auto& centroid = set.centroids[c];
        double d = 0.0;
        for (std::size_t h = 0; h < profile.size(); ++h) {
            const double diff = profile[h] - centroid[h % centroid.size()];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (best < 0) throw std::invalid_argument("assign_cluster: no cluster of kind " + to_string(kind));
    return best;
}

namespace {

nlohmann::json params_to_json(const VehicleParams& p) {
    return {{"kind", to_string(p.kind)},
            {"battery_capacity", p.battery_capacity},
            {"max_charge_rate", p.max_charge_rate},
            {"tank_capacity", p.tank_capacity},
            {"max_fuel_rate", p.max_fuel_rate},
            {"max_generation_rate", p.max_generation_rate},
            {"charge_efficiency", p.charge_efficiency},
            {"generation_efficiency", p.generation_efficiency},
            {"initial_storage", p.initial_storage},
            {"initial_fuel", p.initial_fuel},
            {"consumption", p.consumption},
            {"gas_energy_density", p.gas_energy_density}};
}

VehicleParams params_from_json(const nlohmann::json& j) {
    VehicleParams p;
    p.kind = vehicle_kind_from_string(j.at("kind").get<std::string>());
    p.battery_capacity = j.at("battery_capacity");
    p.max_charge_rate = j.at("max_charge_rate");
    p.tank_capacity = j.at("tank_capacity");
    p.max_fuel_rate = j.at("max_fuel_rate");
    p.max_generation_rate = j.at("max_generation_rate");
    p.charge_efficiency = j.at("charge_efficiency");
    p.generation_efficiency = j.at("generation_efficiency");
    p.initial_storage = j.at("initial_storage");
    p.initial_fuel = j.at("initial_fuel");
    p.consumption = j.at("consumption");
    p.gas_energy_density = j.at("gas_energy_density");
    return p;
}

}  // namespace

void save_cluster_set(const ClusterSet& set, const std::filesystem::path& path) {
    nlohmann::json clusters = nlohmann::json::array();
    for (std::size_t c = 0; c < set.k(); ++c) {
        clusters.push_back({{"centroid", set.centroids[c]},
                            {"kind", to_string(set.kinds[c])},
                            {"members", set.member_counts[c]},
                            {"weight", set.weights[c]},
                            {"params", params_to_json(set.params[c])}});
    }
    nlohmann::json doc = {{"k", set.k()},
                          {"training_size", set.training_size},
                          {"within_ss", set.within_ss},
                          {"assignments", set.assignments},
                          {"clusters", clusters}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

ClusterSet load_cluster_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const auto doc = nlohmann::json::parse(in);
    ClusterSet set;
    set.training_size = doc.at("training_size");
    set.within_ss = doc.value("within_ss", 0.0);
    set.assignments = doc.value("assignments", std::vector<int>{});
    for (const auto& c : doc.at("clusters")) {
        set.centroids.push_back(c.at("centroid").get<std::vector<double>>());
        set.kinds.push_back(vehicle_kind_from_string(c.at("kind").get<std::string>()));
        set.member_counts.push_back(c.at("members"));
        set.weights.push_back(c.at("weight"));
        set.params.push_back(params_from_json(c.at("params")));
    }
    set.validate();
    return set;
}

}  // namespace evdr
