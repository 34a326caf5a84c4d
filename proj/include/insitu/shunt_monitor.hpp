#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "insitu/bus_cost.hpp"
#include "insitu/electrical.hpp"
#include "insitu/quantizer.hpp"
#include "insitu/signal.hpp"
#include "insitu/units.hpp"

namespace insitu {

using Microseconds = std::chrono::microseconds;

inline constexpr std::array<int, 8> kConversionTimesUs{140, 204, 332, 588, 1100, 2116, 4156, 8244};
inline constexpr std::array<int, 8> kAveragingCounts{1, 4, 16, 64, 128, 256, 512, 1024};

enum class MonitorMode { power_down, triggered, continuous };

std::string_view to_string(MonitorMode mode);

// Register pointer addresses of the emulated device. See docs/registers.md.
namespace reg {
inline constexpr std::uint8_t config = 0x00;
inline constexpr std::uint8_t shunt_voltage = 0x01;
inline constexpr std::uint8_t bus_voltage = 0x02;
inline constexpr std::uint8_t power = 0x03;
inline constexpr std::uint8_t current = 0x04;
inline constexpr std::uint8_t alert = 0x06;  // mask/enable

// Bits of the mask/enable register.
inline constexpr std::uint16_t conversion_ready_alert = 1u << 10;
inline constexpr std::uint16_t overflow_flag = 1u << 2;
inline constexpr std::uint16_t conversion_ready_flag = 1u << 3;
}  // namespace reg

struct MonitorConfig {
    Microseconds shunt_conv{1100};
    Microseconds bus_conv{1100};
    int averaging = 1;
    MonitorMode mode = MonitorMode::continuous;
    bool alert_enabled = true;

    /// (shunt_conv + bus_conv) * averaging.
    [[nodiscard]] SimTime sample_period() const;

    /// Throws InvalidParameter naming the offending field and the allowed set.
    void validate() const;

    /// Config register image (AVG[11:9], VBUSCT[8:6], VSHCT[5:3], MODE[2:0]).
    [[nodiscard]] std::uint16_t encode() const;
};

bool is_valid_conversion_time(Microseconds t);
bool is_valid_averaging(int n);

struct NoiseModel {
    // Std-dev of the additive Gaussian noise on every internal shunt
    // conversion, before averaging.
    Volts sigma_shunt{16e-6};
    double gain_error = 5e-4;

    void validate() const;

    static NoiseModel ideal() { return {Volts(0.0), 0.0}; }
};

struct MonitorSupply {
    Watts active{1.1e-3};      // while converting
    Amperes sleep_current{2e-6};
    Volts v_supply{3.0};

    [[nodiscard]] Watts sleep() const { return v_supply * sleep_current; }
    void validate() const;
};

struct ConversionEvent {
    SimTime window_start{0};
    SimTime completed{0};
    std::int32_t shunt_code = 0;
    std::int32_t bus_code = 0;
    bool alert = false;
    bool saturated = false;
    Amperes current{0.0};
    Volts bus_voltage{0.0};

    [[nodiscard]] Watts power() const { return bus_voltage * current; }
};

struct RegisterRead {
    std::uint16_t code = 0;
    ReadCost cost;
};

// Behavioural model of an INA226-class shunt/bus monitor. A single owner
// drives it forward in time with advance(); register contents latch until the
// next completed conversion.
class ShuntMonitor {
public:
    ShuntMonitor(MonitorConfig cfg, Ohms r_shunt, NoiseModel noise = {}, std::uint64_t seed = 0,
                 MonitorSupply supply = {}, SimTime start = SimTime{0});

    /// Writes the configuration register at `now`. Restarts the conversion
    /// schedule; an in-flight triggered conversion is abandoned.
    void configure(const MonitorConfig& cfg, SimTime now);

    /// Runs all conversions that complete in (now, until] against `load`.
    std::vector<ConversionEvent> advance(const LoadProfile& load, SimTime until);

    /// Starts one averaged conversion at `now`; it completes one sample period
    /// later (delivered through advance()).
    void trigger_single(SimTime now);

    /// Completion time of the next conversion, or SimTime::max() if none.
    [[nodiscard]] SimTime next_completion() const;

    /// Reads a register over `bus`, charging one transaction.
    RegisterRead read_register(std::uint8_t address, BusLink& bus);
    /// Register contents without bus traffic or side effects.
    [[nodiscard]] std::uint16_t peek(std::uint8_t address) const;

    [[nodiscard]] SimTime now() const { return now_; }
    [[nodiscard]] const MonitorConfig& config() const { return cfg_; }
    [[nodiscard]] const NoiseModel& noise() const { return noise_; }
    [[nodiscard]] const MonitorSupply& supply() const { return supply_; }
    [[nodiscard]] Ohms r_shunt() const { return r_shunt_; }
    [[nodiscard]] bool conversion_ready() const { return conversion_ready_; }
    [[nodiscard]] bool busy() const { return pending_ != SimTime::max(); }
    [[nodiscard]] bool overflow() const { return overflow_; }

    [[nodiscard]] Amperes current_lsb() const { return current_lsb_; }
    /// 25 current LSBs per power code.
    [[nodiscard]] Watts power_lsb() const { return Watts(25.0 * current_lsb_.value()); }
    [[nodiscard]] const QuantizerSpec<Unit::volt>& shunt_quantizer() const { return shunt_q_; }
    [[nodiscard]] const QuantizerSpec<Unit::volt>& bus_quantizer() const { return bus_q_; }

    [[nodiscard]] Seconds active_time() const { return to_seconds(active_); }
    [[nodiscard]] Seconds sleep_time() const { return to_seconds(sleeping_); }
    /// Supply energy of the monitor itself since construction.
    [[nodiscard]] Joules supply_energy() const;

    [[nodiscard]] Amperes decode_current(std::uint16_t current_register) const;
    [[nodiscard]] Volts decode_bus_voltage(std::uint16_t bus_register) const;
    [[nodiscard]] Volts decode_shunt_voltage(std::uint16_t shunt_register) const;
    [[nodiscard]] Watts decode_power(std::uint16_t power_register) const;

private:
    void accrue_until(SimTime t);
    ConversionEvent convert(const LoadProfile& load, SimTime window_start);

    MonitorConfig cfg_;
    Ohms r_shunt_;
    NoiseModel noise_;
    MonitorSupply supply_;
    Amperes current_lsb_;
    QuantizerSpec<Unit::volt> shunt_q_;
    QuantizerSpec<Unit::volt> bus_q_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};

    SimTime now_{0};
    SimTime schedule_origin_{0};  // continuous mode: completions at origin + k*period
    SimTime pending_ = SimTime::max();  // triggered conversion completion

    SimTime active_{0};
    SimTime sleeping_{0};

    std::uint16_t reg_config_ = 0;
    std::uint16_t reg_shunt_ = 0;
    std::uint16_t reg_bus_ = 0;
    std::uint16_t reg_power_ = 0;
    std::uint16_t reg_current_ = 0;
    bool conversion_ready_ = false;
    bool overflow_ = false;
};

}  // namespace insitu
