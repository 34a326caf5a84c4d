#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "insitu/attribution.hpp"
#include "insitu/csv.hpp"
#include "insitu/harvest.hpp"
#include "insitu/oracle.hpp"
#include "insitu/scenario.hpp"
#include "insitu/tracing.hpp"

namespace insitu {

// Failure after validation succeeded (I/O, missing data). Exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SummaryRow {
    std::string quantity;
    std::string value;
};

struct RunArtifacts {
    std::uint64_t seed = 0;
    // Plain runs.
    std::optional<RunResult> run;
    EnergyReport report;
    std::vector<TraceRecord> traces;
    SimTime covered_start{0};  // span covered by sample windows
    SimTime covered_end{0};
    Joules shunt_loss{0.0};
    // Day-cycle runs.
    std::optional<DayCycleResult> day;
    std::vector<DayBin> bins;
    // Both.
    EnergyLedger ledger;
    std::optional<OracleResult> oracle;  // per-thread truth over the covered span
    Joules oracle_sampled{0.0};          // truth over exactly the sample windows
    Joules oracle_run_total{0.0};        // truth over the whole run
    std::vector<SummaryRow> summary;
};

/// Runs a validated scenario in memory. `seed` overrides the scenario seed.
RunArtifacts execute(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt);

/// Writes every CSV/text artifact of `artifacts` into `dir`.
void write_artifacts(const Scenario& scenario, const RunArtifacts& artifacts, const std::filesystem::path& dir);

struct CompareRow {
    std::string quantity;
    double measured = 0.0;
    double oracle = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;  // 0 when the oracle value is 0
};

/// Per-quantity errors of a finished run directory against its oracle file.
/// Throws RuntimeFailure when the run carries no oracle data.
std::vector<CompareRow> compare_oracle(const std::filesystem::path& run_dir);
void write_compare(const std::vector<CompareRow>& rows, const std::filesystem::path& path);

struct SweepRun {
    std::uint64_t seed = 0;
    double current_ma = 0.0;  // 0 unless a current override was given
    Joules measured{0.0};
    Joules oracle{0.0};
    double rel_error = 0.0;
    Amperes deviation{0.0};  // |measured - oracle| as a mean current
};

struct Percentiles {
    double p05 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p95 = 0.0;
};

/// Linear-interpolated percentiles of `values` (copied and sorted).
Percentiles percentiles(std::vector<double> values);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line through (x, y). Needs two distinct x values.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct CurrentPoint {
    double current_ma = 0.0;
    double median_abs_rel_error = 0.0;
    double median_deviation_a = 0.0;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    Percentiles abs_rel_error;
    std::vector<CurrentPoint> currents;
    std::optional<LinearFit> deviation_fit;  // deviation [A] against current [A]
};

/// Replaces every compute and io current of the scenario with `current`.
Scenario with_constant_current(Scenario scenario, Amperes current);

/// Seeds seed, seed+1, ... of the scenario; with `currents_ma` the whole seed
/// range is repeated per current. Requires the oracle.
SweepResult sweep(const Scenario& scenario, int seeds, const std::vector<double>& currents_ma = {});
void write_sweep(const SweepResult& result, const std::filesystem::path& dir);

/// Rebins a finished run. Day-cycle runs give the day report layout; plain
/// runs give mean sampled power per bin.
csv::Table rebin(const std::filesystem::path& run_dir, SimTime bin);

/// "2h", "30m", "90s", "250ms" or a bare number of seconds.
SimTime parse_duration(const std::string& text);

}  // namespace insitu
