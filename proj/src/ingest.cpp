#include "evdr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "evdr/rng.hpp"

namespace evdr {
namespace {

constexpr std::uint64_t kSynthStream = 0x73796e74ull;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

bool parse_int(const std::string& text, long long& out) {
    const std::string t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return !t.empty() && ec == std::errc() && ptr == t.data() + t.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::string format_number(double v) {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

double ProfileRow::total() const {
    double sum = 0.0;
    for (double m : miles) sum += m;
    return sum;
}

ProfileTable load_profiles(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string name = path.string();
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(name, 0, "empty file");
    ++line_no;
    {
        const auto header = split(trim(line), ',');
        bool ok = header.size() == 1 + kHoursPerDay && trim(header[0]) == "id";
        for (int h = 0; ok && h < kHoursPerDay; ++h) ok = trim(header[1 + h]) == "h" + std::to_string(h);
        if (!ok) throw ParseError(name, line_no, "expected header id,h0,...,h23");
    }

    ProfileTable table;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != 1 + kHoursPerDay) {
            throw ParseError(name, line_no, "row has " + std::to_string(fields.size()) +
                                                " columns, expected " + std::to_string(1 + kHoursPerDay));
        }
        ProfileRow row;
        row.id = trim(fields[0]);
        if (row.id.empty()) throw ParseError(name, line_no, "missing vehicle id");
        row.miles.resize(kHoursPerDay);
        for (int h = 0; h < kHoursPerDay; ++h) {
            double v = 0.0;
            if (!parse_double(fields[1 + h], v)) throw ParseError(name, line_no, "non-numeric mileage in h" + std::to_string(h));
            if (v < 0.0) throw ParseError(name, line_no, "negative mileage in h" + std::to_string(h));
            row.miles[h] = v;
        }
        table.rows.push_back(std::move(row));
    }
    if (table.empty()) throw ParseError(name, line_no, "no profile rows");
    return table;
}

void write_profiles(const ProfileTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "id";
    for (int h = 0; h < kHoursPerDay; ++h) out << ",h" << h;
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.id;
        for (double m : row.miles) out << ',' << format_number(m);
        out << '\n';
    }
}

double Archetype::daily_miles() const {
    double sum = 0.0;
    for (const auto& t : trips) sum += t.miles;
    return sum;
}

std::vector<Archetype> default_archetypes() {
    return {
        {"short_commuter", 0.32, {{7, 1, 9.0}, {17, 1, 9.0}}},
        {"long_commuter", 0.12, {{6, 2, 38.0}, {16, 2, 38.0}}},
        {"errand_driver", 0.24, {{10, 1, 4.0}, {13, 1, 5.0}, {16, 1, 4.0}}},
        {"night_shift", 0.08, {{21, 1, 14.0}, {7, 1, 14.0}}},
        {"weekend_style", 0.18, {{11, 2, 22.0}, {15, 1, 8.0}, {19, 1, 8.0}}},
        {"heavy_driver", 0.06, {{6, 3, 42.0}, {12, 2, 24.0}, {16, 3, 42.0}}},
    };
}

std::vector<Archetype> load_archetypes(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string name = path.string();
    std::vector<Archetype> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw ParseError(name, line_no, "expected name,weight,trips");
        Archetype a;
        a.name = trim(fields[0]);
        if (!parse_double(fields[1], a.weight) || a.weight <= 0.0)
            throw ParseError(name, line_no, "weight must be a positive number");
        for (const auto& trip_text : split(trim(fields[2]), ';')) {
            if (trim(trip_text).empty()) continue;
            const auto parts = split(trim(trip_text), ':');
            long long start = 0, hours = 0;
            Trip trip;
            if (parts.size() != 3 || !parse_int(parts[0], start) || !parse_int(parts[1], hours) ||
                !parse_double(parts[2], trip.miles)) {
                throw ParseError(name, line_no, "trip must be start:hours:miles");
            }
            if (start < 0 || hours < 1 || start + hours > kHoursPerDay || trip.miles < 0.0)
                throw ParseError(name, line_no, "trip outside the day or negative miles");
            trip.start = static_cast<int>(start);
            trip.hours = static_cast<int>(hours);
            a.trips.push_back(trip);
        }
        out.push_back(std::move(a));
    }
    if (out.empty()) throw ParseError(name, line_no, "no archetypes");
    return out;
}

ProfileTable synth_fleet(int count, const std::vector<Archetype>& archetypes, std::uint64_t seed,
                         const SynthOptions& options) {
    if (archetypes.empty()) throw std::invalid_argument("synth_fleet: empty archetype list");
    if (count < 1) throw std::invalid_argument("synth_fleet: count must be at least 1");
    double total_weight = 0.0;
    for (const auto& a : archetypes) {
        if (!(a.weight > 0.0)) throw std::invalid_argument("synth_fleet: archetype weights must be positive");
        total_weight += a.weight;
    }
    if (std::abs(total_weight - 1.0) > 1e-9) throw std::invalid_argument("synth_fleet: archetype weights must sum to 1");

    ProfileTable table;
    table.rows.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(derive_seed(seed, kSynthStream, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);

        double pick = unit(rng) * total_weight;
        std::size_t a = 0;
        while (a + 1 < archetypes.size() && pick >= archetypes[a].weight) {
            pick -= archetypes[a].weight;
            ++a;
        }
        const Archetype& arch = archetypes[a];
        const double factor = std::exp(options.mileage_sigma * std::clamp(normal(rng), -3.0, 3.0));

        ProfileRow row;
        row.id = "v" + std::to_string(i);
        row.miles.assign(kHoursPerDay, 0.0);
        std::uniform_int_distribution<int> jitter(-options.departure_jitter, options.departure_jitter);
        for (const auto& trip : arch.trips) {
            const int start = std::clamp(trip.start + jitter(rng), 0, kHoursPerDay - trip.hours);
            for (int h = 0; h < trip.hours; ++h) row.miles[start + h] += factor * trip.miles / trip.hours;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

double expected_bev_share(const std::vector<Archetype>& archetypes, const SynthOptions& options,
                          double threshold) {
    double share = 0.0;
    for (const auto& a : archetypes) {
        const double miles = a.daily_miles();
        if (miles <= 0.0) {
            share += a.weight;
            continue;
        }
        if (options.mileage_sigma == 0.0) {
            if (miles < threshold) share += a.weight;
            continue;
        }
        // The normal draw is clamped to +-3, which moves the tails onto the endpoints.
        const double z = std::log(threshold / miles) / options.mileage_sigma;
        if (z > 3.0) share += a.weight;
        else if (z > -3.0) share += a.weight * 0.5 * std::erfc(-z / std::numbers::sqrt2);
    }
    return share;
}

HourlySeries load_series(const std::filesystem::path& path, std::size_t expected_len, Unit unit) {
    auto in = open_input(path);
    const std::string name = path.string();
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(name, 0, "empty file");
    ++line_no;
    {
        const auto header = split(trim(line), ',');
        if (header.size() != 2 || trim(header[0]) != "hour") throw ParseError(name, line_no, "expected header hour,value");
    }
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        long long hour = 0;
        double v = 0.0;
        if (fields.size() != 2 || !parse_int(fields[0], hour) || !parse_double(fields[1], v))
            throw ParseError(name, line_no, "malformed hour,value row");
        if (hour != static_cast<long long>(values.size()))
            throw ParseError(name, line_no, "hours must be consecutive from 0");
        if (is_quantity(unit) && v < 0.0)
            throw ParseError(name, line_no, "negative " + to_string(unit) + " value");
        values.push_back(v);
    }
    if (values.size() != expected_len) {
        throw ParseError(name, line_no, "series has " + std::to_string(values.size()) + " rows, expected " +
                                            std::to_string(expected_len));
    }
    return HourlySeries(std::move(values), unit);
}

void write_series(const HourlySeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "hour,value\n";
    for (std::size_t h = 0; h < series.size(); ++h) out << h << ',' << format_number(series[h]) << '\n';
}

HourlySeries synth_base_load(std::size_t horizon, double peak_kw) {
    if (!(peak_kw > 0.0)) throw std::invalid_argument("synth_base_load: peak must be positive");
    std::vector<double> load(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        const double hour = static_cast<double>(h % kHoursPerDay);
        const int day = static_cast<int>(h / kHoursPerDay);
        // Mild day-to-day variation so calendar-day peaks differ.
        const double day_scale = 1.0 - 0.02 * ((day * 3) % 5);
        const double phase = 2.0 * std::numbers::pi * (hour - 5.0) / kHoursPerDay;
        load[h] = peak_kw * day_scale * (0.75 - 0.25 * std::cos(phase));
    }
    return HourlySeries(std::move(load), Unit::KW);
}

HourlySeries tou_prices(std::size_t horizon, const TouTariff& tariff) {
    std::vector<double> p(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        const int hour = static_cast<int>(h % kHoursPerDay);
        if (hour >= 13 && hour < 19) p[h] = tariff.peak;
        else if ((hour >= 10 && hour < 13) || (hour >= 19 && hour < 21)) p[h] = tariff.part_peak;
        else p[h] = tariff.off_peak;
    }
    return HourlySeries(std::move(p), Unit::DollarsPerKWh);
}

HourlySeries flat_series(std::size_t horizon, double value, Unit unit) {
    return HourlySeries(std::vector<double>(horizon, value), unit);
}

}  // namespace evdr
