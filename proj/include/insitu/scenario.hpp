#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "insitu/bus_cost.hpp"
#include "insitu/errors.hpp"
#include "insitu/harvest.hpp"
#include "insitu/sched.hpp"
#include "insitu/shunt_monitor.hpp"
#include "insitu/tracing.hpp"
#include "insitu/units.hpp"

namespace insitu {

inline constexpr int kScenarioFormatVersion = 1;

// Parse or validation failure pointing at a field of the scenario file.
class ScenarioError : public InvalidParameter {
public:
    ScenarioError(std::string source, int line, std::string field, const std::string& what);

    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string source_;
    int line_;
    std::string field_;
};

// A store drained by a plain run, optionally topped up by a panel.
struct StoreSpec {
    SuperCap cap;
    std::optional<SolarProfile> solar;
    double charger_efficiency = 1.0;
};

// Field-trial firmware settings; their presence makes a day-cycle scenario.
struct DayCycleSpec {
    HarvestConfig harvest;
    DutyCycleParams duty;
    SimTime task_duration{0};
    SimTime bin = std::chrono::hours(2);
};

struct Scenario {
    std::string name;
    std::string source;  // file path or "<string>"
    std::uint64_t seed = 0;
    SimTime duration{0};
    Volts supply{3.0};
    Ohms r_shunt{2.0};
    MonitorConfig monitor;
    NoiseModel noise;
    MonitorSupply monitor_supply;
    BusConfig bus;
    std::optional<std::filesystem::path> calibration;
    RunOptions run;  // node model and measurement thread
    std::vector<ThreadSpec> threads;
    TraceMode trace_mode = TraceMode::series;
    std::optional<StoreSpec> store;
    std::optional<DayCycleSpec> day_cycle;
    bool oracle = true;

    [[nodiscard]] bool is_day_cycle() const { return day_cycle.has_value(); }

    /// Cross-module checks run before any simulation. Throws ScenarioError.
    void validate() const;
};

/// Parses the YAML scenario format. Throws ScenarioError with the file, line
/// and dotted field path of the first problem.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace insitu
