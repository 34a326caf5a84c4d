#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "insitu/bus_cost.hpp"
#include "insitu/sched.hpp"
#include "insitu/shunt_monitor.hpp"
#include "insitu/signal.hpp"
#include "insitu/tracing.hpp"
#include "insitu/units.hpp"

namespace insitu {

struct SuperCap {
    Farads capacitance{100.0};
    Volts v_now{2.7};
    Volts v_max{2.7};
    Volts v_min_operating{1.8};

    [[nodiscard]] Joules energy() const { return Joules(0.5 * capacitance.value() * v_now.value() * v_now.value()); }
    void validate() const;
};

struct CapStepResult {
    SuperCap cap;
    Joules delta{0.0};        // change of stored energy
    Joules unharvested{0.0};  // charge refused because the store was full
    Joules shortfall{0.0};    // demand the empty store could not deliver
};

/// Applies net power `p_net` (positive charges) for `dt`:
/// v' = sqrt(max(0, v^2 + 2*p_net*dt/C)), clamped to v_max.
CapStepResult cap_step(const SuperCap& cap, Watts p_net, Seconds dt);

// Panel power offered to the charger over time.
class SolarProfile {
public:
    enum class Kind { constant, table, diurnal };

    SolarProfile() = default;
    static SolarProfile constant(Watts p);
    /// Piecewise-linear (time, power) points, held beyond the ends.
    static SolarProfile table(PiecewiseLinear points);
    /// Half-sine between sunrise and sunset every 24 h, zero at night.
    static SolarProfile diurnal(Watts peak, Seconds sunrise, Seconds sunset);

    [[nodiscard]] Watts power_at(SimTime t) const;
    /// Exact energy offered over [t0, t1].
    [[nodiscard]] Joules energy(SimTime t0, SimTime t1) const;
    [[nodiscard]] bool daylight(SimTime t) const { return power_at(t).value() > 0.0; }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] Watts peak() const { return peak_; }
    [[nodiscard]] Seconds sunrise() const { return sunrise_; }
    [[nodiscard]] Seconds sunset() const { return sunset_; }

private:
    Kind kind_ = Kind::constant;
    Watts peak_{0.0};
    Seconds sunrise_{0.0};
    Seconds sunset_{0.0};
    PiecewiseLinear table_;
};

struct DutyCycleParams {
    Seconds interval_min{10.0};
    Seconds interval_max{600.0};
    Seconds interval_initial{60.0};
    double headroom = 0.8;
    double alpha = 0.2;
    Watts epsilon{1e-6};

    void validate() const;
};

struct DutyCycleState {
    DutyCycleParams params;
    Joules task_energy_estimate{0.0};
    Watts harvest_power_estimate{0.0};
    Seconds interval{60.0};
    bool primed = false;  // first observation seeds both estimates

    static DutyCycleState initial(const DutyCycleParams& params);
};

/// Folds one traced task and one charging measurement into the EWMA estimates
/// and recomputes interval = clamp(E / (headroom * max(P, eps)), min, max).
/// Throws InvalidParameter unless the traced aggregate is positive.
DutyCycleState adapt_interval(const DutyCycleState& state, const TraceRecord& traced, Watts charging);

// Store energy bookkeeping. in - out - overhead - unharvested == end - start.
struct EnergyLedger {
    Joules start{0.0};
    Joules end{0.0};
    Joules in{0.0};           // absorbed by the charger while enabled
    Joules out{0.0};          // delivered to the node
    Joules overhead{0.0};     // monitor supply, bus pull-ups, shunt loss
    Joules unharvested{0.0};  // refused while full
    Joules shortfall{0.0};    // node demand the store could not meet (already removed from out)
    Joules disabled{0.0};     // panel energy ignored while charging was switched off
    Joules monitor{0.0};
    Joules bus{0.0};
    Joules shunt_loss{0.0};

    [[nodiscard]] Joules residual() const { return in - out - overhead - unharvested - (end - start); }
    /// |residual| over the largest bookkeeping term.
    [[nodiscard]] double relative_residual() const;
};

struct HarvestConfig {
    SuperCap cap;
    SolarProfile solar;
    double charger_efficiency = 1.0;
    Amperes node_sleep_current{10e-6};
    Ohms r_shunt{2.0};
    // Long single conversion used while the node sleeps to measure charging.
    MonitorConfig charge_window{Microseconds(8244), Microseconds(8244), 512, MonitorMode::triggered, true};
    // Continuous sampling while a traced task runs.
    MonitorConfig task_sampling{Microseconds(1100), Microseconds(1100), 4, MonitorMode::continuous, true};
    SimTime max_step = std::chrono::seconds(60);
    SimTime window_step = std::chrono::milliseconds(50);

    void validate() const;
};

struct TaskOutcome {
    RunResult run;
    std::vector<TraceRecord> traces;
    Joules traced{0.0};  // sum of trace aggregates
    Joules true_energy{0.0};
};

// Store, charger, panel and the in-situ monitor on the store terminal. The
// monitor's current register is positive for current leaving the store, so a
// charging store reads negative.
class PowerSubsystem {
public:
    PowerSubsystem(HarvestConfig cfg, NoiseModel noise, std::uint64_t seed, const BusCostModel& bus_model,
                   BusConfig bus_cfg, MonitorSupply supply = {});

    /// Node sleeps until `t` with the charger in its current state.
    void idle_until(SimTime t);

    /// One triggered conversion with charging enabled while the node sleeps.
    /// Returns the measured net charging power (panel minus sleep load). Throws
    /// BusyError if a conversion is already in flight.
    Watts measure_charging();

    /// Consumption of the sleeping node plus a constant extra `node_power`,
    /// measured with the charger off for `window`. Restores the previous
    /// charger state.
    Watts isolated_consumption(Watts node_power, SimTime window);

    /// Runs a traced task through the scheduler with the charger off.
    TaskOutcome run_task(std::span<const ThreadSpec> threads, SimTime duration, RunOptions options);

    void set_charging(bool enabled) { charging_ = enabled; }
    [[nodiscard]] bool charging() const { return charging_; }
    [[nodiscard]] SimTime now() const { return now_; }
    [[nodiscard]] const SuperCap& cap() const { return cap_; }
    [[nodiscard]] const EnergyLedger& ledger() const { return ledger_; }
    [[nodiscard]] const HarvestConfig& config() const { return cfg_; }
    [[nodiscard]] ShuntMonitor& monitor() { return monitor_; }
    [[nodiscard]] const BusLink& bus() const { return bus_; }

    struct VoltagePoint {
        SimTime t;
        Volts v;
    };
    [[nodiscard]] const std::vector<VoltagePoint>& voltage_log() const { return vlog_; }

private:
    // Advances the store by dt with the node drawing `node_power`. Returns the
    // net current at the store terminal (positive leaving the store).
    Amperes step(SimTime dt, Watts node_power, std::optional<Joules> shunt_loss = std::nullopt);
    // Books monitor supply and bus energy spent since the last call.
    void sync_overhead();
    Watts read_power();

    HarvestConfig cfg_;
    SuperCap cap_;
    ShuntMonitor monitor_;
    BusLink bus_;
    bool charging_ = true;
    SimTime now_{0};
    EnergyLedger ledger_;
    Joules monitor_seen_{0.0};
    Joules bus_seen_{0.0};
    std::vector<VoltagePoint> vlog_;
};

struct DayEvent {
    SimTime t{0};
    Joules traced{0.0};
    Joules true_energy{0.0};
    Watts charging{0.0};
    Seconds interval{0.0};
    Volts v_cap{0.0};
    bool skipped = false;  // store below the operating voltage
};

struct DayCycleResult {
    std::vector<DayEvent> events;
    std::vector<PowerSubsystem::VoltagePoint> voltage;
    EnergyLedger ledger;
};

/// Field-trial firmware loop: run the traced task, measure charging, adapt the
/// interval, sleep. Runs for `duration` from time zero.
DayCycleResult run_day_cycle(PowerSubsystem& power, std::span<const ThreadSpec> task, SimTime task_duration,
                             const RunOptions& options, const DutyCycleParams& duty, SimTime duration);

struct DayBin {
    SimTime start{0};
    SimTime end{0};
    Watts p_use{0.0};     // negative: traced task energy per bin length
    Watts p_charge{0.0};  // mean measured charging, floored at zero
    Volts v_cap_end{0.0};
};

/// Rebins day events into fixed bins covering [0, span).
std::vector<DayBin> bin_day(std::span<const DayEvent> events, std::span<const PowerSubsystem::VoltagePoint> voltage,
                            SimTime bin, SimTime span);

}  // namespace insitu
