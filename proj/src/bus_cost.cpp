#include "insitu/bus_cost.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "insitu/electrical.hpp"
#include "insitu/errors.hpp"

namespace insitu {

std::string_view to_string(SpeedMode mode)
{
    switch (mode) {
    case SpeedMode::fast: return "fast";
    case SpeedMode::fast_plus: return "fast_plus";
    case SpeedMode::high: return "high";
    }
    return "?";
}

std::optional<SpeedMode> parse_speed_mode(std::string_view text)
{
    if (text == "fast") return SpeedMode::fast;
    if (text == "fast_plus" || text == "fast+") return SpeedMode::fast_plus;
    if (text == "high") return SpeedMode::high;
    return std::nullopt;
}

Seconds rise_time(SpeedMode mode)
{
    switch (mode) {
    case SpeedMode::fast: return Seconds(300e-9);
    case SpeedMode::fast_plus: return Seconds(120e-9);
    case SpeedMode::high: return Seconds(40e-9);
    }
    return Seconds(300e-9);
}

Hertz nominal_clock(SpeedMode mode)
{
    switch (mode) {
    case SpeedMode::fast: return Hertz(400e3);
    case SpeedMode::fast_plus: return Hertz(1e6);
    case SpeedMode::high: return Hertz(3.4e6);
    }
    return Hertz(400e3);
}

Ohms BusConfig::max_pullup() const { return insitu::max_pullup(rise_time(speed), c_bus); }

bool BusConfig::spec_compliant() const { return pullup <= max_pullup(); }

Watts ReadCost::bus_power() const
{
    if (time.value() <= 0.0) {
        return Watts(0.0);
    }
    return bus_energy / time;
}

Joules ReadCost::total_energy(Watts p_mcu) const { return read_energy(p_mcu, bus_power(), time); }

CalibrationTable::CalibrationTable(std::vector<CalibrationRow> rows) : rows_(std::move(rows))
{
    for (const auto& r : rows_) {
        if (!(r.pullup.value() > 0.0) || !(r.time.value() > 0.0) || r.energy.value() < 0.0) {
            throw InvalidParameter("calibration rows need positive pull-up and time and non-negative energy");
        }
    }
    std::stable_sort(rows_.begin(), rows_.end(), [](const CalibrationRow& a, const CalibrationRow& b) {
        if (a.speed != b.speed) {
            return a.speed < b.speed;
        }
        return a.pullup < b.pullup;
    });
}

const CalibrationTable& CalibrationTable::defaults()
{
    // Same rows as data/i2c_calibration.csv.
    static const CalibrationTable table = [] {
        struct Raw {
            SpeedMode s;
            double ohms, us, nws;
        };
        constexpr Raw raw[] = {
            {SpeedMode::fast, 330, 259.25, 4500.0},     {SpeedMode::fast, 1000, 267.75, 1780.9},
            {SpeedMode::fast, 2200, 280.5, 1058.9},     {SpeedMode::fast, 4700, 340.0, 850.0},
            {SpeedMode::fast_plus, 330, 103.7, 1800.0}, {SpeedMode::fast_plus, 1000, 107.1, 712.4},
            {SpeedMode::fast_plus, 2200, 112.2, 423.6}, {SpeedMode::fast_plus, 4700, 136.0, 340.0},
            {SpeedMode::high, 330, 30.5, 529.4},        {SpeedMode::high, 1000, 31.5, 209.5},
            {SpeedMode::high, 2200, 33.0, 124.6},       {SpeedMode::high, 4700, 40.0, 100.0},
        };
        std::vector<CalibrationRow> rows;
        for (const auto& r : raw) {
            rows.push_back({r.s, Ohms(r.ohms), Seconds(r.us * 1e-6), Joules(r.nws * 1e-9)});
        }
        return CalibrationTable(std::move(rows));
    }();
    return table;
}

CalibrationTable CalibrationTable::parse(std::istream& in)
{
    std::vector<CalibrationRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        if (line.compare(first, 10, "speed_mode") == 0) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            const auto b = field.find_first_not_of(" \t\r");
            const auto e = field.find_last_not_of(" \t\r");
            fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        }
        const auto fail = [&](const std::string& why) {
            throw InvalidParameter("calibration line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 4) {
            fail("expected 4 fields (speed_mode,pullup_ohms,time_us,energy_nWs), got " + std::to_string(fields.size()));
        }
        const auto speed = parse_speed_mode(fields[0]);
        if (!speed) {
            fail("unknown speed mode '" + fields[0] + "'");
        }
        double values[3];
        for (int i = 0; i < 3; ++i) {
            try {
                std::size_t used = 0;
                values[i] = std::stod(fields[i + 1], &used);
                if (used != fields[i + 1].size()) {
                    throw std::invalid_argument("trailing characters");
                }
            } catch (const std::exception&) {
                fail("field " + std::to_string(i + 2) + " is not a number: '" + fields[i + 1] + "'");
            }
        }
        if (!(values[0] > 0.0) || !(values[1] > 0.0) || values[2] < 0.0) {
            fail("pull-up and time must be positive, energy non-negative");
        }
        rows.push_back({*speed, Ohms(values[0]), Seconds(values[1] * 1e-6), Joules(values[2] * 1e-9)});
    }
    if (rows.empty()) {
        throw InvalidParameter("calibration table has no rows");
    }
    return CalibrationTable(std::move(rows));
}

CalibrationTable CalibrationTable::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidParameter("cannot open calibration table " + path.string());
    }
    return parse(in);
}

CalibrationTable CalibrationTable::scaled_energy(double factor) const
{
    std::vector<CalibrationRow> rows = rows_;
    for (auto& r : rows) {
        r.energy *= factor;
    }
    return CalibrationTable(std::move(rows));
}

ReadCost CalibrationTable::lookup(SpeedMode speed, Ohms pullup) const
{
    if (rows_.empty()) {
        throw InvalidParameter("calibration table is empty");
    }
    if (!(pullup.value() > 0.0)) {
        throw InvalidParameter("pull-up must be positive");
    }
    ReadCost cost;
    SpeedMode mode = speed;
    const auto has_mode = [&](SpeedMode m) {
        return std::any_of(rows_.begin(), rows_.end(), [m](const CalibrationRow& r) { return r.speed == m; });
    };
    if (!has_mode(mode)) {
        cost.fallback = true;
        double best = 0.0;
        bool found = false;
        for (const auto& r : rows_) {
            const double d = std::abs(std::log(nominal_clock(r.speed) / nominal_clock(speed)));
            if (!found || d < best) {
                best = d;
                mode = r.speed;
                found = true;
            }
        }
    }
    const auto lo_it = std::find_if(rows_.begin(), rows_.end(), [&](const CalibrationRow& r) { return r.speed == mode; });
    const auto hi_it = std::find_if(lo_it, rows_.end(), [&](const CalibrationRow& r) { return r.speed != mode; });
    const CalibrationRow& first = *lo_it;
    const CalibrationRow& last = *(hi_it - 1);
    if (pullup < first.pullup) {
        cost.fallback = true;
        cost.time = first.time;
        cost.bus_energy = first.energy;
        return cost;
    }
    if (pullup > last.pullup) {
        cost.fallback = true;
        cost.time = last.time;
        cost.bus_energy = last.energy;
        return cost;
    }
    for (auto it = lo_it; it != hi_it; ++it) {
        if (it->pullup == pullup) {
            cost.time = it->time;
            cost.bus_energy = it->energy;
            return cost;
        }
        if (it + 1 != hi_it && it->pullup < pullup && pullup < (it + 1)->pullup) {
            const double x0 = 1.0 / it->pullup.value();
            const double x1 = 1.0 / (it + 1)->pullup.value();
            const double w = (1.0 / pullup.value() - x0) / (x1 - x0);
            cost.time = it->time + ((it + 1)->time - it->time) * w;
            cost.bus_energy = it->energy + ((it + 1)->energy - it->energy) * w;
            return cost;
        }
    }
    cost.time = last.time;
    cost.bus_energy = last.energy;
    return cost;
}

ReadCost BusCostModel::transaction_cost(const BusConfig& cfg, int n_register_reads) const
{
    if (n_register_reads < 1) {
        throw InvalidParameter("a transaction needs at least one register read");
    }
    ReadCost one = table_.lookup(cfg.speed, cfg.pullup);
    const auto n = static_cast<double>(n_register_reads);
    one.time *= n;
    one.bus_energy *= n;
    return one;
}

BusConfig BusCostModel::optimal_config(std::span<const BusConfig> candidates, Watts p_mcu) const
{
    if (candidates.empty()) {
        throw InvalidParameter("optimal_config needs at least one candidate");
    }
    std::size_t best = 0;
    Joules best_energy{0.0};
    Seconds best_time{0.0};
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const ReadCost cost = transaction_cost(candidates[i], 1);
        const Joules e = cost.total_energy(p_mcu);
        bool take = i == 0;
        if (!take) {
            const double scale = std::max(std::abs(e.value()), std::abs(best_energy.value()));
            const double diff = e.value() - best_energy.value();
            if (diff < -1e-12 * scale) {
                take = true;
            } else if (std::abs(diff) <= 1e-12 * scale) {
                if (cost.time < best_time) {
                    take = true;
                } else if (cost.time == best_time && candidates[i].pullup > candidates[best].pullup) {
                    take = true;
                }
            }
        }
        if (take) {
            best = i;
            best_energy = e;
            best_time = cost.time;
        }
    }
    return candidates[best];
}

std::vector<BusConfig> measured_candidate_grid(Volts v_dd)
{
    std::vector<BusConfig> grid;
    for (SpeedMode s : {SpeedMode::fast, SpeedMode::fast_plus, SpeedMode::high}) {
        for (double r : {330.0, 1000.0, 2200.0, 4700.0}) {
            BusConfig cfg;
            cfg.speed = s;
            cfg.pullup = Ohms(r);
            cfg.v_dd = v_dd;
            grid.push_back(cfg);
        }
    }
    return grid;
}

BusLink::BusLink(const BusCostModel& model, BusConfig cfg)
    : cfg_(cfg), per_read_(model.transaction_cost(cfg, 1))
{
}

ReadCost BusLink::charge_read()
{
    ++reads_;
    return per_read_;
}

}  // namespace insitu
