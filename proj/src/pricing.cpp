#include "evdr/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace evdr {

namespace {
// Relative gap, in units of b * max|p|, kept between a driving hour and the
// cheapest parked hour.
constexpr double kDrivingMargin = 1e-6;
}  // namespace

PriceBook compute_prices(const lp::LpSolution& sol, const Scenario& scenario, const ClusterSet& set) {
    if (sol.status != lp::LpStatus::Optimal) throw std::invalid_argument("compute_prices: LP solution is not optimal");
    if (sol.blocks.size() != set.k()) throw std::invalid_argument("compute_prices: solution and cluster set disagree on k");
    const std::size_t n = scenario.horizon;

    double pmax = 0.0;
    for (double v : scenario.elec_price.values()) pmax = std::max(pmax, std::abs(v));
    pmax = std::max(pmax, 1e-6);

    PriceBook book;
    book.horizon = n;
    for (std::size_t l = 0; l < set.k(); ++l) {
        const auto& blk = sol.blocks[l];
        if (blk.charge_reduced_cost.size() != n) throw std::invalid_argument("compute_prices: horizon mismatch");
        const auto miles = tile(set.centroids[l], n);

        // Driving hours: the charging column is fixed at zero, so its fixing
        // multiplier is free. Take the reduced cost, lifted just above the
        // cheapest parked hour when it would otherwise undercut it.
        double parked_min = std::numeric_limits<double>::infinity();
        for (std::size_t h = 0; h < n; ++h)
            if (miles[h] <= 0.0) parked_min = std::min(parked_min, blk.charge_reduced_cost[h]);
        const double margin = set.weights[l] * pmax * kDrivingMargin;

        std::vector<double> d(n), eta(n, 0.0), charge(n);
        double scale = 0.0;
        for (std::size_t h = 0; h < n; ++h) {
            const double rc = blk.charge_reduced_cost[h];
            if (miles[h] > 0.0) {
                d[h] = std::isfinite(parked_min) ? std::max(rc, parked_min + margin) : rc + margin;
                eta[h] = rc - d[h];
            } else {
                d[h] = rc;
            }
            charge[h] = std::max(blk.charge[h], 0.0);
            scale = std::max(scale, std::abs(d[h]));
        }
        book.d.push_back(std::move(d));
        book.eta.push_back(std::move(eta));
        book.lp_charge.push_back(std::move(charge));
        book.report_scale.push_back(scale);
    }
    return book;
}

std::vector<double> to_fractions(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("to_fractions: values must be finite and non-negative");
        total += v;
    }
    std::vector<double> out(values.size(), 0.0);
    if (total <= 0.0) return out;
    std::size_t last = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = values[i] / total;
        if (values[i] > 0.0) last = i;
    }
    // Make the last positive entry absorb the rounding so the sum is exactly 1.
    double others = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (i != last) others += out[i];
    out[last] = 1.0 - others;
    for (int tries = 0; tries < 8; ++tries) {
        double s = 0.0;
        for (double v : out) s += v;
        if (s == 1.0) break;
        out[last] = std::nextafter(out[last], s < 1.0 ? 2.0 : -1.0);
    }
    return out;
}

RatioBook compute_ratios(const lp::LpSolution& sol, const ClusterSet& set) {
    if (sol.status != lp::LpStatus::Optimal) throw std::invalid_argument("compute_ratios: LP solution is not optimal");
    if (sol.blocks.size() != set.k()) throw std::invalid_argument("compute_ratios: solution and cluster set disagree on k");

    // Primal values within this of zero are solver noise.
    constexpr double kNoise = 1e-12;
    auto clean = [&](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        for (std::size_t h = 0; h < v.size(); ++h) out[h] = v[h] > kNoise ? v[h] : 0.0;
        return out;
    };

    RatioBook book;
    book.horizon = sol.theta.size();
    for (std::size_t l = 0; l < set.k(); ++l) {
        const auto& blk = sol.blocks[l];
        const auto& v = set.params[l];
        const auto c = clean(blk.charge), g = clean(blk.generate), f = clean(blk.fuel);
        book.charge.push_back(to_fractions(c));
        book.generate.push_back(to_fractions(g));
        book.fuel.push_back(to_fractions(f));

        double sc = 0.0, sg = 0.0, sf = 0.0;
        for (std::size_t h = 0; h < c.size(); ++h) {
            sc += c[h];
            sg += g[h];
            sf += f[h];
        }
        const double e_c = v.charge_efficiency * sc;
        const double e_g = v.generation_efficiency * sg;
        const double e_f = std::min(e_g, v.generation_efficiency * v.gas_energy_density * sf);
        const double total = e_c + e_g;
        if (total > 0.0) {
            book.share_charge.push_back(e_c / total);
            book.share_fuel.push_back(e_f / total);
            book.share_generate.push_back(std::max(0.0, 1.0 - e_c / total - e_f / total));
        } else {
            book.share_charge.push_back(0.0);
            book.share_generate.push_back(0.0);
            book.share_fuel.push_back(0.0);
        }
    }
    return book;
}

std::vector<double> normalize_for_report(const std::vector<double>& series) {
    double m = 0.0;
    for (double v : series) m = std::max(m, std::abs(v));
    std::vector<double> out(series.size(), 0.0);
    if (m == 0.0) return out;
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = series[i] / m;
    return out;
}

namespace {

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

}  // namespace

void save_price_book(const PriceBook& book, const std::filesystem::path& path) {
    nlohmann::json clusters = nlohmann::json::object();
    for (std::size_t l = 0; l < book.k(); ++l) {
        clusters[std::to_string(l)] = {{"d", book.d[l]},
                                       {"eta", book.eta[l]},
                                       {"lp_charge", book.lp_charge[l]},
                                       {"report_scale", book.report_scale[l]},
                                       {"d_normalized", normalize_for_report(book.d[l])}};
    }
    write_json({{"horizon", book.horizon}, {"k", book.k()}, {"clusters", clusters}}, path);
}

PriceBook load_price_book(const std::filesystem::path& path) {
    const auto doc = read_json(path);
    PriceBook book;
    book.horizon = doc.at("horizon");
    const std::size_t k = doc.at("k");
    for (std::size_t l = 0; l < k; ++l) {
        const auto& c = doc.at("clusters").at(std::to_string(l));
        book.d.push_back(c.at("d").get<std::vector<double>>());
        book.eta.push_back(c.at("eta").get<std::vector<double>>());
        book.lp_charge.push_back(c.at("lp_charge").get<std::vector<double>>());
        book.report_scale.push_back(c.at("report_scale"));
        if (book.d.back().size() != book.horizon) throw std::invalid_argument("price book: series length mismatch");
    }
    return book;
}

void save_ratio_book(const RatioBook& book, const std::filesystem::path& path) {
    nlohmann::json clusters = nlohmann::json::object();
    for (std::size_t l = 0; l < book.k(); ++l) {
        clusters[std::to_string(l)] = {{"charge", book.charge[l]},
                                       {"generate", book.generate[l]},
                                       {"fuel", book.fuel[l]},
                                       {"share_charge", book.share_charge[l]},
                                       {"share_generate", book.share_generate[l]},
                                       {"share_fuel", book.share_fuel[l]}};
    }
    write_json({{"horizon", book.horizon}, {"k", book.k()}, {"clusters", clusters}}, path);
}

RatioBook load_ratio_book(const std::filesystem::path& path) {
    const auto doc = read_json(path);
    RatioBook book;
    book.horizon = doc.at("horizon");
    const std::size_t k = doc.at("k");
    for (std::size_t l = 0; l < k; ++l) {
        const auto& c = doc.at("clusters").at(std::to_string(l));
        book.charge.push_back(c.at("charge").get<std::vector<double>>());
        book.generate.push_back(c.at("generate").get<std::vector<double>>());
        book.fuel.push_back(c.at("fuel").get<std::vector<double>>());
        book.share_charge.push_back(c.at("share_charge"));
        book.share_generate.push_back(c.at("share_generate"));
        book.share_fuel.push_back(c.at("share_fuel"));
    }
    return book;
}

}  // namespace evdr
