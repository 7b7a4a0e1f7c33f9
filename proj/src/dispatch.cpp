#include "evdr/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace evdr {

ChargeLedger::ChargeLedger(const HourlySeries& cap) {
    initial_.reserve(cap.size());
    for (double v : cap.values()) initial_.push_back(std::max<std::int64_t>(0, energy_units_floor(v)));
    remaining_ = initial_;
}

std::vector<std::int64_t> ChargeLedger::snapshot(std::uint64_t* version) const {
    std::lock_guard lock(mu_);
    if (version) *version = version_;
    return remaining_;
}

std::int64_t ChargeLedger::remaining_units(std::size_t h) const {
    std::lock_guard lock(mu_);
    return remaining_.at(h);
}

std::uint64_t ChargeLedger::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

bool ChargeLedger::try_commit(const std::vector<std::int64_t>& units, std::uint64_t expected_version) {
    if (units.size() != remaining_.size()) throw std::invalid_argument("ledger commit: horizon mismatch");
    std::lock_guard lock(mu_);
    if (version_ != expected_version) return false;
    for (std::size_t h = 0; h < units.size(); ++h)
        if (units[h] < 0 || units[h] > remaining_[h]) return false;
    for (std::size_t h = 0; h < units.size(); ++h) remaining_[h] -= units[h];
    ++version_;
    return true;
}

void ChargeLedger::commit(const std::vector<std::int64_t>& units) {
    if (units.size() != remaining_.size()) throw std::invalid_argument("ledger commit: horizon mismatch");
    std::lock_guard lock(mu_);
    for (std::size_t h = 0; h < units.size(); ++h)
        if (units[h] < 0 || units[h] > remaining_[h])
            throw std::runtime_error("ledger overdraw at hour " + std::to_string(h));
    for (std::size_t h = 0; h < units.size(); ++h) remaining_[h] -= units[h];
    ++version_;
}

double VehicleSchedule::total_unmet() const { return std::accumulate(unmet.begin(), unmet.end(), 0.0); }

std::string to_string(DispatcherKind kind) {
    switch (kind) {
        case DispatcherKind::CAP: return "cap";
        case DispatcherKind::Standard: return "standard";
        case DispatcherKind::LowestCost: return "lowest_cost";
        case DispatcherKind::PrimalPct: return "primal_pct";
    }
    return "?";
}

DispatcherKind dispatcher_from_string(const std::string& text) {
    for (auto k : all_dispatchers())
        if (to_string(k) == text) return k;
    throw std::invalid_argument("unknown dispatcher '" + text + "' (expected cap, standard, lowest_cost, primal_pct)");
}

const std::vector<DispatcherKind>& all_dispatchers() {
    static const std::vector<DispatcherKind> kinds = {DispatcherKind::CAP, DispatcherKind::Standard,
                                                      DispatcherKind::LowestCost, DispatcherKind::PrimalPct};
    return kinds;
}

namespace {

constexpr double kTraceTol = 1e-9;  // kWh

// Raising the trace at hour k raises every later hour too, so headroom is
// taken over the whole tail.
double max_from(const std::vector<double>& s, std::size_t k) {
    return *std::max_element(s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
}

// Working schedule of one vehicle. Traces are always derived from the
// decision vectors so the balance identities hold by construction.
class Plan {
public:
    explicit Plan(const Vehicle& v)
        : v_(v), p_(v.params), n_(v.profile.size()), e_(n_), cu_(n_, 0), g_(n_, 0.0), f_(n_, 0.0), unmet_(n_, 0.0) {
        for (std::size_t h = 0; h < n_; ++h) e_[h] = p_.consumption * v.profile[h];
        cbar_units_ = energy_units_floor(p_.max_charge_rate);
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] bool chargeable(std::size_t h) const {
        return !v_.driving(h) && static_cast<int>(h) >= v_.plug_in_hour;
    }
    [[nodiscard]] bool phev() const noexcept { return p_.kind == VehicleKind::PHEV; }
    [[nodiscard]] const std::vector<std::int64_t>& charge_units() const noexcept { return cu_; }
    [[nodiscard]] double demand(std::size_t h) const { return e_[h]; }

    [[nodiscard]] std::vector<double> storage() const {
        std::vector<double> s(n_);
        double cur = p_.initial_storage;
        for (std::size_t h = 0; h < n_; ++h) {
            cur += p_.charge_efficiency * energy_from_units(cu_[h]) + p_.generation_efficiency * g_[h] + unmet_[h] - e_[h];
            s[h] = cur;
        }
        return s;
    }

    [[nodiscard]] std::vector<double> tank() const {
        std::vector<double> sg(n_);
        double cur = p_.initial_fuel;
        for (std::size_t h = 0; h < n_; ++h) {
            cur += f_[h] - g_[h] * p_.gallons_per_kwh();
            sg[h] = cur;
        }
        return sg;
    }

    // Room to charge at parked hour h given the battery level before it.
    std::int64_t charge_room_units(std::size_t h, double level_before) const {
        const double room = p_.battery_capacity - level_before;
        if (room <= 0.0) return 0;
        return std::max<std::int64_t>(0, std::min(cbar_units_ - cu_[h], energy_units_floor(room / p_.charge_efficiency)));
    }

    void add_charge(std::size_t h, std::int64_t units) { cu_[h] += units; }

    /// Burn up to `kwh` of gasoline energy at driving hour k, refuelling as
    /// needed. `battery_room` bounds the added battery energy. Returns the
    /// amount generated.
    double generate(std::size_t k, double kwh, double battery_room) {
        if (!phev() || !v_.driving(k) || kwh <= 0.0) return 0.0;
        double lim = std::min(kwh, p_.max_generation_rate - g_[k]);
        lim = std::min(lim, battery_room / p_.generation_efficiency);
        const auto sg = tank();
        const double tank_min = *std::min_element(sg.begin() + static_cast<std::ptrdiff_t>(k), sg.end());
        const double fuel_room = std::max(0.0, tank_min) + (p_.max_fuel_rate - f_[k]);
        lim = std::min(lim, fuel_room * p_.gas_energy_density);
        if (lim <= 1e-15) return 0.0;
        g_[k] += lim;
        const double short_gal = lim * p_.gallons_per_kwh() - std::max(0.0, tank_min);
        if (short_gal > 0.0) {
            f_[k] += std::min(short_gal, p_.max_fuel_rate - f_[k]);
            if (notifications_.empty() || notifications_.back() != static_cast<int>(k)) notifications_.push_back(static_cast<int>(k));
        }
        return lim;
    }

    /// Buy up to `gallons` at driving hour h without overfilling the tank.
    void add_fuel(std::size_t h, double gallons) {
        if (!phev() || !v_.driving(h) || gallons <= 0.0) return;
        const auto sg = tank();
        const double room = p_.tank_capacity - *std::max_element(sg.begin() + static_cast<std::ptrdiff_t>(h), sg.end());
        f_[h] += std::max(0.0, std::min({gallons, room, p_.max_fuel_rate - f_[h]}));
    }
    [[nodiscard]] double generated(std::size_t h) const { return g_[h]; }
    [[nodiscard]] double fueled(std::size_t h) const { return f_[h]; }

    void record_unmet(std::size_t h, double kwh) {
        unmet_[h] += kwh;
        if (kwh > kTraceTol) failures_.push_back({static_cast<int>(h), kwh});
    }

    /// Cover every deficit of the storage trace in time order: charge in
    /// earlier connected hours taken in `order`, then (PHEV) generate, then
    /// record unmet demand.
    template <typename Avail>
    void fill_deficits(const std::vector<std::size_t>& order, Avail avail) {
        for (std::size_t h = 0; h < n_; ++h) {
            auto s = storage();
            if (s[h] >= -kTraceTol) continue;
            for (std::size_t k : order) {
                if (k >= h || !chargeable(k)) continue;
                std::int64_t lim = std::min<std::int64_t>(cbar_units_ - cu_[k], avail(k));
                if (lim <= 0) continue;
                const double head = p_.battery_capacity - max_from(s, k);
                if (head <= 0.0) continue;
                lim = std::min(lim, energy_units_floor(head / p_.charge_efficiency));
                const std::int64_t want = energy_units_ceil(-s[h] / p_.charge_efficiency);
                const std::int64_t add = std::min(want, lim);
                if (add <= 0) continue;
                cu_[k] += add;
                const double de = p_.charge_efficiency * energy_from_units(add);
                for (std::size_t j = k; j < n_; ++j) s[j] += de;
                if (s[h] >= -kTraceTol) break;
            }
            if (s[h] < -kTraceTol && phev()) {
                for (std::size_t k = h + 1; k-- > 0;) {
                    if (!v_.driving(k)) continue;
                    const double room = p_.battery_capacity - max_from(s, k);
                    const double got = generate(k, -s[h] / p_.generation_efficiency, std::max(0.0, room));
                    if (got > 0.0) {
                        const double de = p_.generation_efficiency * got;
                        for (std::size_t j = k; j < n_; ++j) s[j] += de;
                    }
                    if (s[h] >= -kTraceTol) break;
                }
            }
            if (s[h] < -kTraceTol) record_unmet(h, -s[h]);
        }
    }

    [[nodiscard]] VehicleSchedule finish(int cluster) const {
        VehicleSchedule out;
        out.vehicle_id = v_.id;
        out.cluster = cluster;
        out.charge_units = cu_;
        out.charge.resize(n_);
        for (std::size_t h = 0; h < n_; ++h) out.charge[h] = energy_from_units(cu_[h]);
        out.generate = g_;
        out.fuel = f_;
        out.storage = storage();
        out.fuel_storage = tank();
        out.unmet = unmet_;
        out.fuel_notifications = notifications_;
        std::sort(out.fuel_notifications.begin(), out.fuel_notifications.end());
        out.fuel_notifications.erase(std::unique(out.fuel_notifications.begin(), out.fuel_notifications.end()),
                                     out.fuel_notifications.end());
        out.failures = failures_;
        return out;
    }

private:
    const Vehicle& v_;
    const VehicleParams& p_;
    std::size_t n_;
    std::vector<double> e_;
    std::vector<std::int64_t> cu_;
    std::vector<double> g_, f_, unmet_;
    std::int64_t cbar_units_ = 0;
    std::vector<int> notifications_;
    std::vector<DemandFailure> failures_;
};

std::vector<std::size_t> order_by_price(const HourlySeries& prices) {
    std::vector<std::size_t> order(prices.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prices[a] < prices[b]; });
    return order;
}

template <typename Build>
VehicleSchedule commit_with_retry(ChargeLedger& ledger, Build build) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::uint64_t version = 0;
        const auto snap = ledger.snapshot(&version);
        auto sched = build(snap);
        if (ledger.try_commit(sched.charge_units, version)) return sched;
    }
    throw std::runtime_error("ledger contention: could not commit schedule");
}

void check_vehicle(const Vehicle& v, std::size_t n) {
    v.validate(n);
    v.params.validate();
}

}  // namespace

std::vector<std::size_t> cap_hour_order(const PriceBook& book, int cluster, const HourlySeries& prices) {
    if (cluster < 0 || static_cast<std::size_t>(cluster) >= book.k())
        throw std::invalid_argument("cap_hour_order: price book lacks cluster");
    if (prices.size() != book.horizon) throw std::invalid_argument("cap_hour_order: horizon mismatch");
    const auto& d = book.d[cluster];
    const auto& lp_c = book.lp_charge[cluster];
    std::vector<std::size_t> order(book.horizon);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::make_tuple(d[a], lp_c[a] > 0.0 ? 0 : 1, prices[a], a) <
               std::make_tuple(d[b], lp_c[b] > 0.0 ? 0 : 1, prices[b], b);
    });
    return order;
}

VehicleSchedule dispatch_cap(const Vehicle& vehicle, const PriceBook& book, const ClusterSet& set,
                             const HourlySeries& prices, ChargeLedger& ledger) {
    const std::size_t n = ledger.horizon();
    check_vehicle(vehicle, n);
    if (book.horizon != n || prices.size() != n) throw std::invalid_argument("dispatch_cap: horizon mismatch");
    const int cluster = assign_cluster(vehicle.profile.values(), vehicle.params.kind, set);
    if (static_cast<std::size_t>(cluster) >= book.k()) throw std::invalid_argument("dispatch_cap: price book lacks cluster");
    const auto order = cap_hour_order(book, cluster, prices);

    return commit_with_retry(ledger, [&](const std::vector<std::int64_t>& snap) {
        Plan plan(vehicle);
        plan.fill_deficits(order, [&](std::size_t k) { return snap[k] - plan.charge_units()[k]; });
        return plan.finish(cluster);
    });
}

VehicleSchedule dispatch_standard(const Vehicle& vehicle) {
    const std::size_t n = vehicle.profile.size();
    check_vehicle(vehicle, n);
    const auto& p = vehicle.params;
    Plan plan(vehicle);
    // Charge on the trace as it will be once every deficit is covered or
    // recorded, i.e. floored at zero.
    double s = p.initial_storage;
    for (std::size_t h = 0; h < n; ++h) {
        if (plan.chargeable(h)) {
            const auto add = plan.charge_room_units(h, s);
            plan.add_charge(h, add);
            s += p.charge_efficiency * energy_from_units(add);
        } else {
            s = std::max(0.0, s - plan.demand(h));
        }
    }
    plan.fill_deficits({}, [](std::size_t) { return std::int64_t{0}; });
    return plan.finish(-1);
}

VehicleSchedule dispatch_lowest_cost(const Vehicle& vehicle, const HourlySeries& prices, ChargeLedger* ledger) {
    const std::size_t n = vehicle.profile.size();
    check_vehicle(vehicle, n);
    if (prices.size() != n) throw std::invalid_argument("dispatch_lowest_cost: horizon mismatch");
    const auto order = order_by_price(prices);
    if (!ledger) {
        Plan plan(vehicle);
        plan.fill_deficits(order, [](std::size_t) { return std::numeric_limits<std::int64_t>::max(); });
        return plan.finish(-1);
    }
    if (ledger->horizon() != n) throw std::invalid_argument("dispatch_lowest_cost: ledger horizon mismatch");
    return commit_with_retry(*ledger, [&](const std::vector<std::int64_t>& snap) {
        Plan plan(vehicle);
        plan.fill_deficits(order, [&](std::size_t k) { return snap[k] - plan.charge_units()[k]; });
        return plan.finish(-1);
    });
}

namespace {

// Move ratio mass off hours outside `mask` onto the nearest hour inside it
// (the earlier one on ties), then renormalize.
std::vector<double> remap(const std::vector<double>& ratio, const std::vector<char>& mask) {
    const std::size_t n = ratio.size();
    std::vector<double> out(n, 0.0);
    if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) return out;
    for (std::size_t h = 0; h < n; ++h) {
        if (ratio[h] <= 0.0) continue;
        if (mask[h]) {
            out[h] += ratio[h];
            continue;
        }
        for (std::size_t dist = 1; dist < n; ++dist) {
            if (h >= dist && mask[h - dist]) {
                out[h - dist] += ratio[h];
                break;
            }
            if (h + dist < n && mask[h + dist]) {
                out[h + dist] += ratio[h];
                break;
            }
        }
    }
    return to_fractions(out);
}

}  // namespace

VehicleSchedule dispatch_primal_pct(const Vehicle& vehicle, const RatioBook& ratios, const ClusterSet& set,
                                    const HourlySeries& prices, ChargeLedger& ledger) {
    const std::size_t n = ledger.horizon();
    check_vehicle(vehicle, n);
    if (ratios.horizon != n || prices.size() != n) throw std::invalid_argument("dispatch_primal_pct: horizon mismatch");
    const int cluster = assign_cluster(vehicle.profile.values(), vehicle.params.kind, set);
    if (static_cast<std::size_t>(cluster) >= ratios.k()) throw std::invalid_argument("dispatch_primal_pct: ratio book lacks cluster");
    const auto& p = vehicle.params;
    const bool phev = p.kind == VehicleKind::PHEV;

    double total_demand = 0.0;
    for (std::size_t h = 0; h < n; ++h) total_demand += p.consumption * vehicle.profile[h];
    const double need = std::max(0.0, total_demand - p.initial_storage);

    std::vector<char> can_charge(n), driving(n);
    for (std::size_t h = 0; h < n; ++h) {
        driving[h] = vehicle.driving(h);
        can_charge[h] = !driving[h] && static_cast<int>(h) >= vehicle.plug_in_hour;
    }
    const auto rc = remap(ratios.charge[cluster], can_charge);
    const auto rg = phev ? remap(ratios.generate[cluster], driving) : std::vector<double>(n, 0.0);
    const auto rf = phev ? remap(ratios.fuel[cluster], driving) : std::vector<double>(n, 0.0);

    const double charge_total = ratios.share_charge[cluster] * need / p.charge_efficiency;
    const double gen_total =
        phev ? (ratios.share_generate[cluster] + ratios.share_fuel[cluster]) * need / p.generation_efficiency : 0.0;
    const double fuel_total = phev ? ratios.share_fuel[cluster] * need / (p.generation_efficiency * p.gas_energy_density) : 0.0;
    const auto price_order = order_by_price(prices);

    return commit_with_retry(ledger, [&](const std::vector<std::int64_t>& snap) {
        std::vector<double> target(n);
        for (std::size_t h = 0; h < n; ++h) target[h] = charge_total * rc[h];

        // Forward pass following the shares on the zero-floored trace; charge
        // clipped by the rate, the ledger or the battery is pushed onto the
        // hours that were not clipped, in proportion to their shares.
        std::optional<Plan> plan;
        for (int round = 0; round < 20; ++round) {
            plan.emplace(vehicle);
            std::vector<char> clipped(n, 0);
            double s = p.initial_storage;
            double shortfall = 0.0;
            for (std::size_t h = 0; h < n; ++h) {
                if (can_charge[h]) {
                    const std::int64_t want = energy_units_round(target[h]);
                    const std::int64_t lim = std::min(plan->charge_room_units(h, s), std::max<std::int64_t>(0, snap[h]));
                    const std::int64_t put = std::min(want, lim);
                    plan->add_charge(h, put);
                    if (want > lim) {
                        clipped[h] = 1;
                        shortfall += energy_from_units(want - lim);
                    }
                    s += p.charge_efficiency * energy_from_units(put);
                    continue;
                }
                if (phev && driving[h]) {
                    plan->add_fuel(h, fuel_total * rf[h]);
                    const double room = std::max(0.0, p.battery_capacity - s + plan->demand(h));
                    s += p.generation_efficiency * plan->generate(h, gen_total * rg[h], room);
                }
                s = std::max(0.0, s - plan->demand(h));
            }
            if (shortfall <= kTraceTol) break;
            double free_share = 0.0;
            for (std::size_t h = 0; h < n; ++h)
                if (can_charge[h] && !clipped[h]) free_share += rc[h];
            if (free_share <= 0.0) break;
            for (std::size_t h = 0; h < n; ++h)
                if (can_charge[h] && !clipped[h]) target[h] += shortfall * rc[h] / free_share;
        }
        plan->fill_deficits(price_order, [&](std::size_t k) { return snap[k] - plan->charge_units()[k]; });
        return plan->finish(cluster);
    });
}

std::vector<std::string> check_schedule(const Vehicle& vehicle, const VehicleSchedule& sc, double tol) {
    std::vector<std::string> problems;
    const std::size_t n = vehicle.profile.size();
    const auto& p = vehicle.params;
    auto bad = [&](std::size_t h, const std::string& what) {
        problems.push_back("hour " + std::to_string(h) + ": " + what);
    };
    if (sc.charge.size() != n || sc.charge_units.size() != n || sc.generate.size() != n || sc.fuel.size() != n ||
        sc.storage.size() != n || sc.fuel_storage.size() != n || sc.unmet.size() != n) {
        problems.push_back("series length differs from horizon");
        return problems;
    }
    double s = p.initial_storage, sg = p.initial_fuel;
    for (std::size_t h = 0; h < n; ++h) {
        const bool drive = vehicle.driving(h);
        if (sc.charge_units[h] < 0) bad(h, "negative charge");
        if (sc.charge[h] != energy_from_units(sc.charge_units[h])) bad(h, "charge differs from its unit count");
        if (sc.charge[h] > p.max_charge_rate + tol) bad(h, "charge above rate");
        if (sc.charge[h] > 0.0 && (drive || static_cast<int>(h) < vehicle.plug_in_hour)) bad(h, "charge while not connected");
        if (sc.generate[h] < -tol || sc.generate[h] > p.max_generation_rate + tol) bad(h, "generation out of bounds");
        if (sc.fuel[h] < -tol || sc.fuel[h] > p.max_fuel_rate + tol) bad(h, "fuel out of bounds");
        if ((sc.generate[h] > 0.0 || sc.fuel[h] > 0.0) && !drive) bad(h, "generation or fuel while parked");
        if (sc.unmet[h] < 0.0 || (sc.unmet[h] > 0.0 && !drive)) bad(h, "bad unmet demand");
        s += p.charge_efficiency * sc.charge[h] + p.generation_efficiency * sc.generate[h] + sc.unmet[h] -
             p.consumption * vehicle.profile[h];
        sg += sc.fuel[h] - sc.generate[h] * p.gallons_per_kwh();
        const double scale = 1.0 + p.battery_capacity;
        if (std::abs(s - sc.storage[h]) > tol * scale) bad(h, "battery balance");
        if (std::abs(sg - sc.fuel_storage[h]) > tol * (1.0 + p.tank_capacity)) bad(h, "fuel balance");
        if (sc.storage[h] < -tol * scale || sc.storage[h] > p.battery_capacity + tol * scale) bad(h, "battery out of range");
        if (sc.fuel_storage[h] < -tol || sc.fuel_storage[h] > p.tank_capacity + tol) bad(h, "tank out of range");
    }
    return problems;
}

void DispatchLog::arrival(const Vehicle& vehicle, DispatcherKind kind) {
    nlohmann::json j = {{"event", "arrival"},
                        {"dispatcher", to_string(kind)},
                        {"vehicle", vehicle.id},
                        {"hour", vehicle.plug_in_hour},
                        {"kind", to_string(vehicle.params.kind)}};
    std::lock_guard lock(mu_);
    lines_.push_back(j.dump());
}

void DispatchLog::schedule(const Vehicle& vehicle, const VehicleSchedule& sc) {
    std::vector<std::string> out;
    if (sc.cluster >= 0) out.push_back(nlohmann::json{{"event", "assignment"}, {"vehicle", vehicle.id}, {"cluster", sc.cluster}}.dump());
    const double charge = std::accumulate(sc.charge.begin(), sc.charge.end(), 0.0);
    const double gen = std::accumulate(sc.generate.begin(), sc.generate.end(), 0.0);
    const double fuel = std::accumulate(sc.fuel.begin(), sc.fuel.end(), 0.0);
    out.push_back(nlohmann::json{{"event", "schedule"},
                                 {"vehicle", vehicle.id},
                                 {"charge_kwh", charge},
                                 {"generate_kwh", gen},
                                 {"fuel_gal", fuel},
                                 {"fuel_notifications", sc.fuel_notifications}}
                      .dump());
    for (const auto& f : sc.failures)
        out.push_back(nlohmann::json{{"event", "demand_failure"}, {"vehicle", vehicle.id}, {"hour", f.hour}, {"unmet_kwh", f.unmet_kwh}}.dump());
    std::lock_guard lock(mu_);
    lines_.insert(lines_.end(), out.begin(), out.end());
}

std::vector<std::string> DispatchLog::lines() const {
    std::lock_guard lock(mu_);
    return lines_;
}

void DispatchLog::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& l : lines()) out << l << '\n';
}

}  // namespace evdr
