#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "insitu/units.hpp"

namespace insitu {

enum class SpeedMode { fast, fast_plus, high };

std::string_view to_string(SpeedMode mode);
std::optional<SpeedMode> parse_speed_mode(std::string_view text);

/// Maximum rise time the I2C specification allows for a speed mode.
Seconds rise_time(SpeedMode mode);
/// Nominal SCL frequency of a speed mode.
Hertz nominal_clock(SpeedMode mode);

struct BusConfig {
    SpeedMode speed = SpeedMode::high;
    Ohms pullup{2200.0};
    Farads c_bus{158e-12};
    Volts v_dd{3.0};

    /// Largest pull-up meeting the rise time of `speed` on this bus.
    [[nodiscard]] Ohms max_pullup() const;
    /// True when the pull-up meets the rise-time requirement. Non-compliant
    /// configurations are allowed; they only get flagged.
    [[nodiscard]] bool spec_compliant() const;
};

struct ReadCost {
    Seconds time{0.0};
    Joules bus_energy{0.0};
    bool fallback = false;  // config was not covered by the table; nearest entry used

    /// Transaction power while the read is on the bus.
    [[nodiscard]] Watts bus_power() const;
    /// Energy of the read including the MCU running for its duration.
    [[nodiscard]] Joules total_energy(Watts p_mcu) const;
};

struct CalibrationRow {
    SpeedMode speed;
    Ohms pullup;
    Seconds time;
    Joules energy;
};

// Measured single-read cost per bus configuration. Within a speed mode the
// cost is interpolated linearly in 1/pullup between neighbouring rows.
class CalibrationTable {
public:
    CalibrationTable() = default;
    explicit CalibrationTable(std::vector<CalibrationRow> rows);

    static const CalibrationTable& defaults();

    /// Parses `speed_mode,pullup_ohms,time_us,energy_nWs` rows. Lines starting
    /// with '#' and a header line are skipped. Throws InvalidParameter with the
    /// offending line number on malformed input.
    static CalibrationTable parse(std::istream& in);
    static CalibrationTable load(const std::filesystem::path& path);

    /// Single-read cost for a configuration. Unknown speed modes fall back to
    /// the nearest mode by clock rate; pull-ups outside the tabulated range
    /// clamp to the nearest row. Both set ReadCost::fallback.
    [[nodiscard]] ReadCost lookup(SpeedMode speed, Ohms pullup) const;

    [[nodiscard]] const std::vector<CalibrationRow>& rows() const { return rows_; }

    /// Same table with every energy multiplied by `factor`.
    [[nodiscard]] CalibrationTable scaled_energy(double factor) const;

private:
    std::vector<CalibrationRow> rows_;
};

class BusCostModel {
public:
    BusCostModel() : table_(CalibrationTable::defaults()) {}
    explicit BusCostModel(CalibrationTable table) : table_(std::move(table)) {}

    /// Cost of `n_register_reads` back-to-back single-register reads.
    [[nodiscard]] ReadCost transaction_cost(const BusConfig& cfg, int n_register_reads = 1) const;

    /// Candidate with the lowest per-read energy when the MCU draws `p_mcu`
    /// during the transaction. Ties go to the shorter read, then the larger
    /// pull-up.
    [[nodiscard]] BusConfig optimal_config(std::span<const BusConfig> candidates, Watts p_mcu) const;

    [[nodiscard]] const CalibrationTable& table() const { return table_; }

private:
    CalibrationTable table_;
};

/// The measured configuration grid: every speed mode with 330 Ohm, 1 kOhm,
/// 2.2 kOhm and 4.7 kOhm pull-ups.
std::vector<BusConfig> measured_candidate_grid(Volts v_dd = Volts(3.0));

// Accumulates the cost of the register traffic on one physical bus.
class BusLink {
public:
    BusLink(const BusCostModel& model, BusConfig cfg);

    /// Charges one single-register read and returns its cost.
    ReadCost charge_read();

    [[nodiscard]] const BusConfig& config() const { return cfg_; }
    [[nodiscard]] const ReadCost& per_read() const { return per_read_; }
    [[nodiscard]] long reads() const { return reads_; }
    [[nodiscard]] Seconds total_time() const { return per_read_.time * static_cast<double>(reads_); }
    [[nodiscard]] Joules total_energy() const { return per_read_.bus_energy * static_cast<double>(reads_); }

private:
    BusConfig cfg_;
    ReadCost per_read_;
    long reads_ = 0;
};

}  // namespace insitu
