#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "evdr/core_model.hpp"

namespace evdr {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ProfileRow {
    std::string id;
    std::vector<double> miles;  // 24 hourly values

    [[nodiscard]] double total() const;
};

struct ProfileTable {
    std::vector<ProfileRow> rows;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
    [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
};

/// CSV with header `id,h0,...,h23`; one daily driving profile per row.
ProfileTable load_profiles(const std::filesystem::path& path);
void write_profiles(const ProfileTable& table, const std::filesystem::path& path);

/// One trip of an archetype: leaves at `start` and spreads `miles` evenly
/// over `hours` consecutive hours.
struct Trip {
    int start = 0;
    int hours = 1;
    double miles = 0.0;
};

struct Archetype {
    std::string name;
    double weight = 0.0;
    std::vector<Trip> trips;

    [[nodiscard]] double daily_miles() const;
};

struct SynthOptions {
    double mileage_sigma = 0.25;  // log-space std-dev of the per-vehicle mileage factor
    int departure_jitter = 1;     // +- hours, drawn per trip
};

/// The six built-in commute archetypes (same content as data/archetypes.csv).
std::vector<Archetype> default_archetypes();

/// Format: `name,weight,start:hours:miles;start:hours:miles;...` per line,
/// `#` comments allowed.
std::vector<Archetype> load_archetypes(const std::filesystem::path& path);

/// Deterministic synthetic fleet; profile i depends only on (seed, i).
ProfileTable synth_fleet(int count, const std::vector<Archetype>& archetypes, std::uint64_t seed,
                         const SynthOptions& options = {});

/// Expected BEV share of synth_fleet output: sum of weight * P(factor * miles < threshold).
double expected_bev_share(const std::vector<Archetype>& archetypes, const SynthOptions& options,
                          double threshold = 70.0);

/// CSV of `hour,value` with exactly `expected_len` data rows. Negative values
/// are rejected for quantity units and accepted for prices.
HourlySeries load_series(const std::filesystem::path& path, std::size_t expected_len, Unit unit);
void write_series(const HourlySeries& series, const std::filesystem::path& path);

// Synthetic stand-ins for the utility data.

/// Smooth daily load with its trough near 05:00 and peak near 17:00.
HourlySeries synth_base_load(std::size_t horizon, double peak_kw);

struct TouTariff {
    double peak = 0.30;       // 13:00-19:00
    double part_peak = 0.11;  // 10:00-13:00 and 19:00-21:00
    double off_peak = 0.05;
};

HourlySeries tou_prices(std::size_t horizon, const TouTariff& tariff);
HourlySeries flat_series(std::size_t horizon, double value, Unit unit);

}  // namespace evdr
