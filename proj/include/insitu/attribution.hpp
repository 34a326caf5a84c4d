#pragma once

#include <span>
#include <string>
#include <vector>

#include "insitu/sched.hpp"
#include "insitu/units.hpp"

namespace insitu {

struct ThreadEnergy {
    std::string id;
    int priority = 0;
    Joules energy{0.0};
    Watts mean_power{0.0};  // energy over the thread's own active time
    double cpu_utilization = 0.0;
    long context_switches = 0;
    Seconds active_time{0.0};
};

// Per-thread view of the sampled energy, in the layout of the `es` shell
// command.
struct EnergyReport {
    std::vector<ThreadEnergy> threads;
    Joules total{0.0};
    Joules unattributed{0.0};  // sampled while the CPU was idle
    Seconds span{0.0};

    [[nodiscard]] const ThreadEnergy* find(const std::string& id) const;
    [[nodiscard]] Joules attributed() const;
};

/// Splits every sample's energy (power times conversion window) among the
/// threads in proportion to their CPU time inside that window. Idle time
/// within a window goes to `unattributed`. Throws InvalidParameter when no
/// sample window overlaps the trace span.
EnergyReport attribute(std::span<const Sample> samples, const ScheduleTrace& trace);

/// Fixed-width text table: thread, priority, switches, cpu%, energy J,
/// mean power W.
std::string format_es_report(const EnergyReport& report);

}  // namespace insitu
