#include "insitu/shunt_monitor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "insitu/errors.hpp"

namespace insitu {

namespace {

template <std::size_t N>
int index_of(const std::array<int, N>& set, int value)
{
    const auto it = std::find(set.begin(), set.end(), value);
    return it == set.end() ? -1 : static_cast<int>(std::distance(set.begin(), it));
}

template <std::size_t N>
std::string list_of(const std::array<int, N>& set)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < N; ++i) {
        os << (i ? ", " : "") << set[i];
    }
    return os.str();
}

std::uint16_t to_register(std::int32_t code, bool& clamped)
{
    const std::int32_t c = std::clamp<std::int32_t>(code, -32768, 32767);
    clamped = c != code;
    return static_cast<std::uint16_t>(static_cast<std::int16_t>(c));
}

SimTime overlap(SimTime a0, SimTime a1, SimTime b0, SimTime b1)
{
    const SimTime lo = std::max(a0, b0);
    const SimTime hi = std::min(a1, b1);
    return hi > lo ? hi - lo : SimTime{0};
}

}  // namespace

std::string_view to_string(MonitorMode mode)
{
    switch (mode) {
    case MonitorMode::power_down: return "power_down";
    case MonitorMode::triggered: return "triggered";
    case MonitorMode::continuous: return "continuous";
    }
    return "?";
}

bool is_valid_conversion_time(Microseconds t) { return index_of(kConversionTimesUs, static_cast<int>(t.count())) >= 0; }

bool is_valid_averaging(int n) { return index_of(kAveragingCounts, n) >= 0; }

SimTime MonitorConfig::sample_period() const
{
    return std::chrono::duration_cast<SimTime>(shunt_conv + bus_conv) * averaging;
}

void MonitorConfig::validate() const
{
    if (!is_valid_conversion_time(shunt_conv)) {
        throw InvalidParameter("shunt conversion time " + std::to_string(shunt_conv.count()) +
                               " us is not supported; allowed: " + list_of(kConversionTimesUs) + " us");
    }
    if (!is_valid_conversion_time(bus_conv)) {
        throw InvalidParameter("bus conversion time " + std::to_string(bus_conv.count()) +
                               " us is not supported; allowed: " + list_of(kConversionTimesUs) + " us");
    }
    if (!is_valid_averaging(averaging)) {
        throw InvalidParameter("averaging count " + std::to_string(averaging) +
                               " is not supported; allowed: " + list_of(kAveragingCounts));
    }
}

std::uint16_t MonitorConfig::encode() const
{
    std::uint16_t mode_bits = 0;
    switch (mode) {
    case MonitorMode::power_down: mode_bits = 0b000; break;
    case MonitorMode::triggered: mode_bits = 0b011; break;
    case MonitorMode::continuous: mode_bits = 0b111; break;
    }
    const auto avg = static_cast<std::uint16_t>(std::max(0, index_of(kAveragingCounts, averaging)));
    const auto vbus = static_cast<std::uint16_t>(std::max(0, index_of(kConversionTimesUs, static_cast<int>(bus_conv.count()))));
    const auto vsh = static_cast<std::uint16_t>(std::max(0, index_of(kConversionTimesUs, static_cast<int>(shunt_conv.count()))));
    return static_cast<std::uint16_t>(0x4000u | (avg << 9) | (vbus << 6) | (vsh << 3) | mode_bits);
}

void NoiseModel::validate() const
{
    if (sigma_shunt.value() < 0.0) {
        throw InvalidParameter("noise sigma_shunt must not be negative");
    }
    if (!(std::abs(gain_error) < 0.01)) {
        throw InvalidParameter("noise gain_error must be within (-1%, +1%)");
    }
}

void MonitorSupply::validate() const
{
    if (active.value() < 0.0 || v_supply.value() <= 0.0) {
        throw InvalidParameter("monitor supply needs non-negative active power and positive voltage");
    }
    if (sleep_current.value() < 0.0 || sleep_current.value() > 2e-6) {
        throw InvalidParameter("monitor power-down current must be within [0, 2 uA]");
    }
}

ShuntMonitor::ShuntMonitor(MonitorConfig cfg, Ohms r_shunt, NoiseModel noise, std::uint64_t seed,
                           MonitorSupply supply, SimTime start)
    : cfg_(cfg),
      r_shunt_(r_shunt),
      noise_(noise),
      supply_(supply),
      current_lsb_(insitu::current_lsb(r_shunt)),
      shunt_q_(kShuntVoltageLsb, 32768, true),
      bus_q_(kBusVoltageLsb, 32767, false),
      rng_(seed),
      now_(start),
      schedule_origin_(start)
{
    cfg_.validate();
    noise_.validate();
    supply_.validate();
    reg_config_ = cfg_.encode();
}

void ShuntMonitor::configure(const MonitorConfig& cfg, SimTime now)
{
    cfg.validate();
    if (now < now_) {
        throw ContractViolation("monitor configured in the past");
    }
    accrue_until(now);
    now_ = now;
    cfg_ = cfg;
    reg_config_ = cfg_.encode();
    schedule_origin_ = now;
    pending_ = SimTime::max();
    overflow_ = false;
}

void ShuntMonitor::accrue_until(SimTime t)
{
    if (t <= now_) {
        return;
    }
    SimTime active{0};
    switch (cfg_.mode) {
    case MonitorMode::continuous: active = t - now_; break;
    case MonitorMode::triggered:
        if (pending_ != SimTime::max()) {
            active = overlap(now_, t, pending_ - cfg_.sample_period(), pending_);
        }
        break;
    case MonitorMode::power_down: break;
    }
    active_ += active;
    sleeping_ += (t - now_) - active;
}

SimTime ShuntMonitor::next_completion() const
{
    switch (cfg_.mode) {
    case MonitorMode::continuous: {
        const SimTime period = cfg_.sample_period();
        const auto k = (now_ - schedule_origin_) / period + 1;
        return schedule_origin_ + period * k;
    }
    case MonitorMode::triggered: return pending_;
    case MonitorMode::power_down: return SimTime::max();
    }
    return SimTime::max();
}

std::vector<ConversionEvent> ShuntMonitor::advance(const LoadProfile& load, SimTime until)
{
    if (until < now_) {
        throw ContractViolation("monitor time cannot move backwards");
    }
    accrue_until(until);
    std::vector<ConversionEvent> events;
    const SimTime period = cfg_.sample_period();
    if (cfg_.mode == MonitorMode::continuous) {
        for (SimTime next = next_completion(); next <= until; next += period) {
            events.push_back(convert(load, next - period));
        }
    } else if (cfg_.mode == MonitorMode::triggered && pending_ <= until) {
        events.push_back(convert(load, pending_ - period));
        pending_ = SimTime::max();
    }
    now_ = until;
    return events;
}

void ShuntMonitor::trigger_single(SimTime now)
{
    if (cfg_.mode != MonitorMode::triggered) {
        throw ModeError(std::string("single conversion requires triggered mode, monitor is in ") +
                        std::string(to_string(cfg_.mode)));
    }
    if (busy()) {
        throw BusyError("a triggered conversion is already in flight");
    }
    if (now < now_) {
        throw ContractViolation("trigger issued in the past");
    }
    accrue_until(now);
    now_ = now;
    pending_ = now + cfg_.sample_period();
}

ConversionEvent ShuntMonitor::convert(const LoadProfile& load, SimTime window_start)
{
    const SimTime step = std::chrono::duration_cast<SimTime>(cfg_.shunt_conv + cfg_.bus_conv);
    const SimTime shunt_len = std::chrono::duration_cast<SimTime>(cfg_.shunt_conv);
    const SimTime bus_len = std::chrono::duration_cast<SimTime>(cfg_.bus_conv);
    const double shunt_s = to_seconds(shunt_len).value();
    const double bus_s = to_seconds(bus_len).value();
    const double sigma = noise_.sigma_shunt.value();

    double shunt_sum = 0.0;
    double bus_sum = 0.0;
    for (int k = 0; k < cfg_.averaging; ++k) {
        const SimTime s = window_start + step * k;
        const double mean_i = load.current.integral(s, s + shunt_len) / shunt_s;
        double v_shunt = mean_i * r_shunt_.value() * (1.0 + noise_.gain_error);
        if (sigma > 0.0) {
            v_shunt += sigma * gauss_(rng_);
        }
        shunt_sum += v_shunt;
        bus_sum += load.voltage.integral(s + shunt_len, s + shunt_len + bus_len) / bus_s;
    }
    const double n = static_cast<double>(cfg_.averaging);
    const QuantizedCode shunt = quantize(Volts(shunt_sum / n), shunt_q_);
    const QuantizedCode bus = quantize(Volts(bus_sum / n), bus_q_);

    bool clamped = false;
    reg_shunt_ = to_register(shunt.code, clamped);
    // Exact current-LSB arithmetic makes the current code equal the shunt code.
    reg_current_ = reg_shunt_;
    reg_bus_ = static_cast<std::uint16_t>(bus.code);
    const auto cur = static_cast<std::int64_t>(std::abs(static_cast<std::int16_t>(reg_current_)));
    const std::int64_t pw = (cur * static_cast<std::int64_t>(reg_bus_) + 10000) / 20000;
    reg_power_ = static_cast<std::uint16_t>(std::min<std::int64_t>(pw, 0xFFFF));
    conversion_ready_ = true;
    if (shunt.saturated || bus.saturated || clamped) {
        overflow_ = true;
    }

    ConversionEvent ev;
    ev.window_start = window_start;
    ev.completed = window_start + cfg_.sample_period();
    ev.shunt_code = shunt.code;
    ev.bus_code = bus.code;
    ev.alert = cfg_.alert_enabled;
    ev.saturated = shunt.saturated || bus.saturated || clamped;
    ev.current = decode_current(reg_current_);
    ev.bus_voltage = decode_bus_voltage(reg_bus_);
    return ev;
}

std::uint16_t ShuntMonitor::peek(std::uint8_t address) const
{
    switch (address) {
    case reg::config: return reg_config_;
    case reg::shunt_voltage: return reg_shunt_;
    case reg::bus_voltage: return reg_bus_;
    case reg::power: return reg_power_;
    case reg::current: return reg_current_;
    case reg::alert: {
        std::uint16_t v = 0;
        if (cfg_.alert_enabled) v |= reg::conversion_ready_alert;
        if (conversion_ready_) v |= reg::conversion_ready_flag;
        if (overflow_) v |= reg::overflow_flag;
        return v;
    }
    default: break;
    }
    throw InvalidParameter("unknown register address " + std::to_string(address));
}

RegisterRead ShuntMonitor::read_register(std::uint8_t address, BusLink& bus)
{
    RegisterRead out;
    out.code = peek(address);
    out.cost = bus.charge_read();
    if (address == reg::alert) {
        conversion_ready_ = false;
    }
    return out;
}

Joules ShuntMonitor::supply_energy() const
{
    return supply_.active * active_time() + supply_.sleep() * sleep_time();
}

Amperes ShuntMonitor::decode_current(std::uint16_t current_register) const
{
    return current_lsb_ * static_cast<double>(static_cast<std::int16_t>(current_register));
}

Volts ShuntMonitor::decode_bus_voltage(std::uint16_t bus_register) const
{
    return kBusVoltageLsb * static_cast<double>(bus_register & 0x7FFF);
}

Volts ShuntMonitor::decode_shunt_voltage(std::uint16_t shunt_register) const
{
    return kShuntVoltageLsb * static_cast<double>(static_cast<std::int16_t>(shunt_register));
}

Watts ShuntMonitor::decode_power(std::uint16_t power_register) const
{
    return power_lsb() * static_cast<double>(power_register);
}

}  // namespace insitu
