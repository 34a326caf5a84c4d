#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "insitu/sched.hpp"
#include "insitu/units.hpp"

namespace insitu {

enum class TraceMode { series, aggregate };

std::string_view to_string(TraceMode mode);
TraceMode parse_trace_mode(std::string_view text);

struct TracePoint {
    SimTime t{0};
    Volts voltage{0.0};
    Amperes current{0.0};
    Watts power{0.0};
};

// Stretch of a trace with no sample for more than 1.5 sample periods, e.g.
// while the measurement thread was blocked. Nothing is interpolated across it.
struct TraceGap {
    SimTime from{0};
    SimTime to{0};
};

struct TraceRecord {
    std::string label;
    int thread = -1;
    SimTime start{0};
    SimTime end{0};
    TraceMode mode = TraceMode::series;
    std::vector<TracePoint> samples;  // empty in aggregate mode
    Joules aggregate{0.0};
    std::vector<TraceGap> gaps;

    [[nodiscard]] Seconds duration() const { return to_seconds(end - start); }
};

/// Builds the record for [start, stop] from the sample stream. Points sit at
/// the centre of each sample window; the window edges get points interpolated
/// from the neighbouring samples. The aggregate is the trapezoidal integral of
/// the point series, so it equals the series integral in both modes.
TraceRecord make_trace(std::string label, SimTime start, SimTime stop, std::span<const Sample> samples,
                       SimTime sample_period, TraceMode mode);

/// Trapezoidal integral of the power series, skipping recorded gaps.
Joules integrate(std::span<const TracePoint> points, std::span<const TraceGap> gaps = {});

// trace_start()/trace_stop() bookkeeping for code that brackets tasks by hand.
class TraceRecorder {
public:
    TraceRecorder(SimTime sample_period, TraceMode mode = TraceMode::series);

    /// Throws ContractViolation if `label` is already open.
    void start(const std::string& label, SimTime at);

    /// Throws ContractViolation if `label` is not open or `at` precedes its
    /// start.
    TraceRecord stop(const std::string& label, SimTime at, std::span<const Sample> samples);

    [[nodiscard]] bool is_open(const std::string& label) const { return open_.count(label) != 0; }

private:
    SimTime period_;
    TraceMode mode_;
    std::map<std::string, SimTime> open_;
};

/// One record per trace mark of a finished run.
std::vector<TraceRecord> collect_traces(const RunResult& run, SimTime sample_period, TraceMode mode);

}  // namespace insitu
