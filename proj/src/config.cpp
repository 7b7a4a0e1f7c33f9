#include "evdr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace evdr {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for " + key + ": '" + text + "'");
    return value;
}

template <typename T>
std::string format_number(T value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

struct Field {
    std::string key;
    std::function<void(ScenarioConfig&, const std::string&, const std::filesystem::path&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <typename T>
Field number(std::string key, T ScenarioConfig::*member) {
    return {key,
            [key, member](ScenarioConfig& c, const std::string& v, const std::filesystem::path&) {
                c.*member = parse_number<T>(key, v);
            },
            [member](const ScenarioConfig& c) { return format_number(c.*member); }};
}

template <typename Outer, typename T>
Field nested(std::string key, Outer ScenarioConfig::*outer, T Outer::*member) {
    return {key,
            [key, outer, member](ScenarioConfig& c, const std::string& v, const std::filesystem::path&) {
                (c.*outer).*member = parse_number<T>(key, v);
            },
            [outer, member](const ScenarioConfig& c) { return format_number((c.*outer).*member); }};
}

Field path(std::string key, std::filesystem::path ScenarioConfig::*member) {
    return {key,
            [member](ScenarioConfig& c, const std::string& v, const std::filesystem::path& base) {
                std::filesystem::path p(v);
                c.*member = (p.is_relative() && !base.empty()) ? base / p : p;
            },
            [member](const ScenarioConfig& c) { return (c.*member).generic_string(); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        number("horizon", &ScenarioConfig::horizon),
        number("fleet_size", &ScenarioConfig::fleet_size),
        number("alpha", &ScenarioConfig::alpha),
        number("seed", &ScenarioConfig::seed),
        number("runs", &ScenarioConfig::runs),
        number("training_size", &ScenarioConfig::training_size),
        number("clusters", &ScenarioConfig::clusters),
        number("kmeans_restarts", &ScenarioConfig::kmeans_restarts),
        number("plug_in_start", &ScenarioConfig::plug_in_start),
        number("plug_in_window", &ScenarioConfig::plug_in_window),
        number("base_peak_kw", &ScenarioConfig::base_peak_kw),
        nested("tou_peak", &ScenarioConfig::tariff, &TouTariff::peak),
        nested("tou_part_peak", &ScenarioConfig::tariff, &TouTariff::part_peak),
        nested("tou_off_peak", &ScenarioConfig::tariff, &TouTariff::off_peak),
        number("gas_price", &ScenarioConfig::gas_price),
        nested("mileage_sigma", &ScenarioConfig::synth, &SynthOptions::mileage_sigma),
        nested("departure_jitter", &ScenarioConfig::synth, &SynthOptions::departure_jitter),
        nested("consumption_kwh_per_mile", &ScenarioConfig::constants, &FleetConstants::consumption_kwh_per_mile),
        nested("gas_kwh_per_gallon", &ScenarioConfig::constants, &FleetConstants::gas_kwh_per_gallon),
        nested("bev_battery_kwh", &ScenarioConfig::constants, &FleetConstants::bev_battery_kwh),
        nested("bev_charge_rate_kw", &ScenarioConfig::constants, &FleetConstants::bev_charge_rate_kw),
        nested("phev_battery_kwh", &ScenarioConfig::constants, &FleetConstants::phev_battery_kwh),
        nested("phev_charge_rate_kw", &ScenarioConfig::constants, &FleetConstants::phev_charge_rate_kw),
        nested("phev_tank_gallons", &ScenarioConfig::constants, &FleetConstants::phev_tank_gallons),
        nested("phev_fuel_rate_gph", &ScenarioConfig::constants, &FleetConstants::phev_fuel_rate_gph),
        nested("phev_generation_kw", &ScenarioConfig::constants, &FleetConstants::phev_generation_kw),
        nested("charge_efficiency", &ScenarioConfig::constants, &FleetConstants::charge_efficiency),
        nested("generation_efficiency", &ScenarioConfig::constants, &FleetConstants::generation_efficiency),
        nested("bev_mileage_threshold", &ScenarioConfig::constants, &FleetConstants::bev_mileage_threshold),
        path("archetypes_file", &ScenarioConfig::archetypes_file),
        path("training_profiles_file", &ScenarioConfig::training_profiles_file),
        path("fleet_profiles_file", &ScenarioConfig::fleet_profiles_file),
        path("base_load_file", &ScenarioConfig::base_load_file),
        path("elec_price_file", &ScenarioConfig::elec_price_file),
        path("gas_price_file", &ScenarioConfig::gas_price_file),
    };
    return table;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (horizon == 0) throw std::invalid_argument("config: horizon must be positive");
    if (fleet_size <= 0) throw std::invalid_argument("config: fleet_size must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be positive");
    if (runs < 1) throw std::invalid_argument("config: runs must be at least 1");
    if (training_size < 1) throw std::invalid_argument("config: training_size must be at least 1");
    if (clusters < 1) throw std::invalid_argument("config: clusters must be at least 1");
    if (kmeans_restarts < 1) throw std::invalid_argument("config: kmeans_restarts must be at least 1");
    if (plug_in_window < 1) throw std::invalid_argument("config: plug_in_window must be at least 1");
    if (plug_in_start < 0 || static_cast<std::size_t>(plug_in_start + plug_in_window) > horizon)
        throw std::invalid_argument("config: plug-in window must lie inside the horizon");
    if (!(base_peak_kw > 0.0)) throw std::invalid_argument("config: base_peak_kw must be positive");
    if (!(gas_price >= 0.0)) throw std::invalid_argument("config: gas_price must be non-negative");
    if (synth.mileage_sigma < 0.0 || synth.departure_jitter < 0)
        throw std::invalid_argument("config: synthetic jitter must be non-negative");
    constants.validate();
}

std::string ScenarioConfig::to_text() const {
    std::ostringstream out;
    for (const auto& f : fields()) out << f.key << " = " << f.get(*this) << '\n';
    return out.str();
}

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    ScenarioConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->set(config, value, base_dir);
    }
    config.validate();
    return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace evdr
