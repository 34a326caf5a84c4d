#pragma once

#include <string>
#include <vector>

#include "insitu/sched.hpp"
#include "insitu/signal.hpp"
#include "insitu/units.hpp"

namespace insitu {

inline constexpr SimTime kOracleStep = std::chrono::microseconds(1);

struct OracleThreadEnergy {
    std::string id;
    Joules energy{0.0};
};

// Ground truth for one run, integrated by brute force from the load profile.
// Nothing here depends on the monitor, bus or noise configuration.
struct OracleResult {
    Joules total{0.0};
    Joules idle{0.0};  // energy while no thread held the CPU
    std::vector<OracleThreadEnergy> threads;
    SimTime step = kOracleStep;

    [[nodiscard]] Joules thread_energy(const std::string& id) const;
};

/// Trapezoidal integral of V(t)*I(t) over [t0, t1] at a fixed step. The last
/// step is shortened to land on t1.
Joules oracle_energy(const LoadProfile& load, SimTime t0, SimTime t1, SimTime step = kOracleStep);

/// Same integral, with each step's energy credited to the thread running at
/// the step midpoint.
OracleResult oracle_run(const LoadProfile& load, const ScheduleTrace& schedule, SimTime step = kOracleStep);

}  // namespace insitu
