#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "insitu/bus_cost.hpp"
#include "insitu/shunt_monitor.hpp"
#include "insitu/signal.hpp"
#include "insitu/units.hpp"

namespace insitu {

enum class ActivityKind { compute, sleep, io, trace_start, trace_stop };

// One step of a scripted thread.
//  compute: occupies the CPU for `duration` of run time and adds `current`
//           (ramping linearly to `ramp_to` if set) while it actually runs.
//  sleep:   blocks the thread for `duration`.
//  io:      blocks the thread for `duration` while a peripheral it started
//           draws `current` (ramping to `ramp_to` if set), whoever holds the
//           CPU.
//  trace_start / trace_stop: zero-time markers bracketing a traced task.
struct Activity {
    ActivityKind kind = ActivityKind::compute;
    SimTime duration{0};
    Amperes current{0.0};
    std::optional<Amperes> ramp_to;
    std::string label;

    static Activity compute(SimTime d, Amperes i, std::optional<Amperes> ramp_to = std::nullopt);
    static Activity sleep(SimTime d);
    static Activity io(SimTime d, Amperes i, std::optional<Amperes> ramp_to = std::nullopt);
    static Activity trace_start(std::string label);
    static Activity trace_stop(std::string label);
};

struct ThreadSpec {
    std::string id;
    int priority = 10;  // lower is more urgent
    std::vector<Activity> script;
    bool repeat = false;
    SimTime start{0};
};

// Electrical model of the node around the scheduled threads.
struct NodeModel {
    Volts supply{3.0};
    Amperes idle_current{0.0};  // CPU asleep, nothing running
    Amperes cpu_current{0.0};   // added whenever any thread runs
};

// The background thread that services monitor alerts.
struct MeasurementThreadConfig {
    std::string id = "measure";
    int priority = 0;
    // Full per-sample path: register reads through unit conversion.
    SimTime t_proc = std::chrono::microseconds(160);
    Amperes current{0.0};
    int reads_per_sample = 2;
    // Alert-to-service latency beyond which a starvation diagnostic is
    // emitted. Zero means one sample period.
    SimTime starvation_deadline{0};
};

struct ThreadInfo {
    std::string id;
    int priority = 0;
    long context_switches = 0;
    bool measurement = false;
};

struct ScheduleEntry {
    int thread = -1;
    SimTime start{0};
    SimTime end{0};
};

// Which thread held the CPU when. Entries are time-ordered and disjoint;
// gaps are idle time.
struct ScheduleTrace {
    std::vector<ThreadInfo> threads;
    std::vector<ScheduleEntry> entries;
    long context_switches = 0;
    SimTime span_start{0};
    SimTime span_end{0};

    [[nodiscard]] SimTime active_time(int thread) const;
    /// Thread running at `t`, -1 when idle.
    [[nodiscard]] int active_at(SimTime t) const;
    [[nodiscard]] int index_of(const std::string& id) const;
};

// One value pair read by the measurement thread, covering the conversion
// window it was averaged over.
struct Sample {
    SimTime window_start{0};
    SimTime completed{0};
    Volts voltage{0.0};
    Amperes current{0.0};
    Watts power{0.0};
    int active_thread = -1;  // thread running when the conversion completed

    [[nodiscard]] Seconds window() const { return to_seconds(completed - window_start); }
    [[nodiscard]] Joules energy() const { return power * window(); }
    [[nodiscard]] SimTime center() const { return window_start + (completed - window_start) / 2; }
};

struct Diagnostic {
    enum class Kind { starvation, overrun };
    Kind kind = Kind::starvation;
    SimTime at{0};
    SimTime delay{0};
    std::string message;
};

struct TraceMark {
    std::string label;
    int thread = -1;
    SimTime start{0};
    SimTime stop{0};
};

struct RunOptions {
    NodeModel node;
    MeasurementThreadConfig measurement;
};

struct RunResult {
    ScheduleTrace schedule;
    std::vector<Sample> samples;
    LoadProfile load;  // ground truth at the measured port
    std::vector<Diagnostic> diagnostics;
    std::vector<TraceMark> marks;
    SimTime duration{0};
    long bus_reads = 0;
    Joules bus_energy{0.0};
    Joules monitor_energy{0.0};
};

/// Validates thread scripts: unique ids, none equal to the measurement id,
/// repeating scripts with positive length, balanced trace labels.
void validate_threads(std::span<const ThreadSpec> threads, const MeasurementThreadConfig& measurement);

/// Deterministic tickless run of `threads` plus the measurement thread for
/// `duration`. The highest-priority ready thread always runs; equal priorities
/// run in FIFO ready order. Each monitor alert wakes the measurement thread,
/// which reads the registers over `bus` and computes for t_proc.
RunResult run(std::span<const ThreadSpec> threads, ShuntMonitor& monitor, BusLink& bus, SimTime duration,
              const RunOptions& options);

/// CPU share of a sampling thread: min(1, t_proc / sample_interval).
double cpu_utilization(Seconds sample_interval, Seconds t_proc);

}  // namespace insitu
