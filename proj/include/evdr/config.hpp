#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "evdr/core_model.hpp"
#include "evdr/ingest.hpp"

namespace evdr {

/// Everything needed to reproduce a scenario. Loaded from a `key = value`
/// text file; `#` starts a comment. Unknown keys are rejected, file paths
/// are resolved relative to the config file's directory.
struct ScenarioConfig {
    std::size_t horizon = 120;
    int fleet_size = 10000;
    double alpha = 1.0;
    std::uint64_t seed = 1;
    int runs = 50;

    int training_size = 400;
    int clusters = 37;
    int kmeans_restarts = 4;

    int plug_in_start = 0;
    int plug_in_window = 12;

    double base_peak_kw = 60000.0;  // 30,000 households at 2 kW
    TouTariff tariff;
    double gas_price = 3.90;  // $/gallon

    SynthOptions synth;
    FleetConstants constants;

    // Optional data files; empty means use the synthetic stand-in.
    std::filesystem::path archetypes_file;
    std::filesystem::path training_profiles_file;
    std::filesystem::path fleet_profiles_file;
    std::filesystem::path base_load_file;
    std::filesystem::path elec_price_file;
    std::filesystem::path gas_price_file;

    void validate() const;

    /// Canonical `key = value` rendering; used for the manifest hash.
    [[nodiscard]] std::string to_text() const;
};

ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace evdr
