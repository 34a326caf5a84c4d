#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "insitu/attribution.hpp"
#include "insitu/errors.hpp"
#include "insitu/oracle.hpp"
#include "insitu/sched.hpp"
#include "insitu/tracing.hpp"

using namespace insitu;
using std::chrono::microseconds;
using std::chrono::milliseconds;

namespace {

struct Rig {
    BusCostModel model;
    ShuntMonitor monitor;
    BusLink bus;

    explicit Rig(MonitorConfig cfg, NoiseModel noise = NoiseModel::ideal(), std::uint64_t seed = 1)
        : monitor(cfg, Ohms(2.0), noise, seed), bus(model, {SpeedMode::high, Ohms(2200.0)})
    {
    }
};

MonitorConfig cfg(int conv_us, int avg)
{
    return {microseconds(conv_us), microseconds(conv_us), avg, MonitorMode::continuous, true};
}

RunOptions options(double volts = 2.7)
{
    RunOptions o;
    o.node.supply = Volts(volts);
    return o;
}

ThreadSpec busy(const std::string& id, int prio, SimTime d, double amps)
{
    return {id, prio, {Activity::compute(d, Amperes(amps))}, false, SimTime{0}};
}

}  // namespace

TEST(CpuUtilization, Law)
{
    EXPECT_NEAR(cpu_utilization(Seconds(1.0), Seconds(570e-6)), 0.00057, 1e-15);
    EXPECT_EQ(cpu_utilization(Seconds(280e-6), Seconds(280e-6)), 1.0);
    EXPECT_EQ(cpu_utilization(Seconds(280e-6), Seconds(300e-6)), 1.0);
    EXPECT_DOUBLE_EQ(cpu_utilization(Seconds(0.01), Seconds(0.005)), 0.5);
    EXPECT_THROW((void)cpu_utilization(Seconds(0.0), Seconds(1e-6)), InvalidParameter);
    // Inverse-linear below saturation.
    for (double t = 1e-3; t < 1.0; t *= 3) {
        EXPECT_NEAR(cpu_utilization(Seconds(t), Seconds(160e-6)) * t, 160e-6, 1e-15);
    }
}

TEST(Run, SimulatedUtilizationMatchesLaw)
{
    for (int avg : {4, 16, 64}) {
        Rig rig(cfg(332, avg));
        const std::vector<ThreadSpec> threads{busy("work", 5, std::chrono::seconds(10), 0.005)};
        const SimTime duration = rig.monitor.config().sample_period() * 40;
        const RunResult r = run(threads, rig.monitor, rig.bus, duration, options());
        const int meas = r.schedule.index_of("measure");
        // Per serviced interval; the first interval has no sample to process.
        const double sim = to_seconds(r.schedule.active_time(meas)) /
                           (to_seconds(rig.monitor.config().sample_period()) * static_cast<double>(r.samples.size()));
        const double law = cpu_utilization(to_seconds(rig.monitor.config().sample_period()), Seconds(160e-6));
        EXPECT_NEAR(sim, law, 0.01 * law) << "avg " << avg;
    }
}

TEST(Run, IdleSystemHasNoContextSwitches)
{
    MonitorConfig c = cfg(332, 16);
    c.alert_enabled = false;
    Rig rig(c);
    const RunResult r = run({}, rig.monitor, rig.bus, milliseconds(100), options());
    EXPECT_EQ(r.schedule.context_switches, 0);
    EXPECT_TRUE(r.schedule.entries.empty());
    EXPECT_TRUE(r.samples.empty());
}

TEST(Run, HigherPriorityPreempts)
{
    Rig rig(cfg(8244, 1024));  // no alert inside the run
    std::vector<ThreadSpec> threads{busy("low", 9, milliseconds(10), 0.001),
                                    {"high", 1, {Activity::compute(milliseconds(2), Amperes(0.002))}, false, milliseconds(3)}};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(20), options());
    ASSERT_EQ(r.schedule.entries.size(), 3u);
    EXPECT_EQ(r.schedule.entries[0].thread, 0);
    EXPECT_EQ(r.schedule.entries[0].end, milliseconds(3));
    EXPECT_EQ(r.schedule.entries[1].thread, 1);
    EXPECT_EQ(r.schedule.entries[1].end, milliseconds(5));
    EXPECT_EQ(r.schedule.entries[2].thread, 0);
    EXPECT_EQ(r.schedule.entries[2].end, milliseconds(12));
}

TEST(Run, EqualPrioritiesRunFifo)
{
    Rig rig(cfg(8244, 1024));
    std::vector<ThreadSpec> threads{{"b", 3, {Activity::compute(milliseconds(1), Amperes(0.0))}, false, milliseconds(1)},
                                    {"a", 3, {Activity::compute(milliseconds(1), Amperes(0.0))}, false, SimTime{0}}};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(5), options());
    ASSERT_EQ(r.schedule.entries.size(), 2u);
    EXPECT_EQ(r.schedule.entries[0].thread, 1);
    EXPECT_EQ(r.schedule.entries[1].thread, 0);
}

TEST(Run, EntriesOrderedAndDisjoint)
{
    Rig rig(cfg(140, 4));
    std::vector<ThreadSpec> threads{
        {"a", 2, {Activity::compute(microseconds(700), Amperes(0.003)), Activity::sleep(microseconds(900))}, true, SimTime{0}},
        {"b", 4, {Activity::compute(microseconds(1300), Amperes(0.006)), Activity::io(microseconds(500), Amperes(0.002))}, true, microseconds(50)}};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(50), options());
    for (std::size_t i = 0; i < r.schedule.entries.size(); ++i) {
        EXPECT_LT(r.schedule.entries[i].start, r.schedule.entries[i].end);
        if (i > 0) {
            EXPECT_LE(r.schedule.entries[i - 1].end, r.schedule.entries[i].start);
        }
    }
}

TEST(Run, StarvationIsDiagnosedNotFatal)
{
    Rig rig(cfg(140, 1));
    MeasurementThreadConfig m;
    m.priority = 9;  // below the busy thread
    RunOptions o = options();
    o.measurement = m;
    const std::vector<ThreadSpec> threads{busy("hog", 1, milliseconds(20), 0.001)};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(30), o);
    bool starved = false;
    for (const auto& d : r.diagnostics) {
        starved = starved || d.kind == Diagnostic::Kind::starvation;
    }
    EXPECT_TRUE(starved);
    EXPECT_FALSE(r.samples.empty());
}

TEST(Run, IoRampIsLinear)
{
    Rig rig(cfg(8244, 1024));
    const std::vector<ThreadSpec> threads{
        {"fan", 5, {Activity::io(milliseconds(10), Amperes(0.01), Amperes(0.02))}, false, SimTime{0}}};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(10), options());
    EXPECT_NEAR(r.load.current.at(milliseconds(5)), 0.015, 1e-12);
    EXPECT_NEAR(r.load.current.integral(SimTime{0}, milliseconds(10)), 0.015 * 0.01, 1e-15);
}

TEST(Run, ValidationRejectsBadScripts)
{
    Rig rig(cfg(332, 16));
    const MeasurementThreadConfig m;
    std::vector<ThreadSpec> dup{busy("x", 1, milliseconds(1), 0.0), busy("x", 2, milliseconds(1), 0.0)};
    EXPECT_THROW(validate_threads(dup, m), InvalidParameter);
    std::vector<ThreadSpec> clash{busy("measure", 1, milliseconds(1), 0.0)};
    EXPECT_THROW(validate_threads(clash, m), InvalidParameter);
    std::vector<ThreadSpec> unbalanced{{"t", 1, {Activity::trace_stop("x")}, false, SimTime{0}}};
    EXPECT_THROW(validate_threads(unbalanced, m), InvalidParameter);
    std::vector<ThreadSpec> twice{{"t", 1, {Activity::trace_start("x"), Activity::trace_start("x")}, false, SimTime{0}}};
    EXPECT_THROW(validate_threads(twice, m), InvalidParameter);
    std::vector<ThreadSpec> empty_loop{{"t", 1, {Activity::trace_start("x"), Activity::trace_stop("x")}, true, SimTime{0}}};
    EXPECT_THROW(validate_threads(empty_loop, m), InvalidParameter);
    std::vector<ThreadSpec> negative{busy("t", 1, milliseconds(1), -0.001)};
    EXPECT_THROW(validate_threads(negative, m), InvalidParameter);
    EXPECT_THROW((void)run({}, rig.monitor, rig.bus, milliseconds(-1), options()), InvalidParameter);
}

TEST(Run, DeterministicReplay)
{
    auto once = [] {
        Rig rig(cfg(140, 4), NoiseModel{}, 99);
        std::vector<ThreadSpec> threads{
            {"a", 2, {Activity::compute(microseconds(700), Amperes(0.003)), Activity::sleep(microseconds(900))}, true, SimTime{0}},
            {"b", 4, {Activity::compute(microseconds(1300), Amperes(0.006))}, true, microseconds(50)}};
        return run(threads, rig.monitor, rig.bus, milliseconds(30), options());
    };
    const RunResult x = once();
    const RunResult y = once();
    ASSERT_EQ(x.schedule.entries.size(), y.schedule.entries.size());
    for (std::size_t i = 0; i < x.schedule.entries.size(); ++i) {
        EXPECT_EQ(x.schedule.entries[i].thread, y.schedule.entries[i].thread);
        EXPECT_EQ(x.schedule.entries[i].start, y.schedule.entries[i].start);
        EXPECT_EQ(x.schedule.entries[i].end, y.schedule.entries[i].end);
    }
    ASSERT_EQ(x.samples.size(), y.samples.size());
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
        EXPECT_EQ(x.samples[i].completed, y.samples[i].completed);
        EXPECT_EQ(x.samples[i].current.value(), y.samples[i].current.value());
    }
}

TEST(Attribute, ProportionalSplit)
{
    ScheduleTrace t;
    t.threads = {{"A", 1, 0, false}, {"B", 2, 0, false}};
    t.entries = {{0, SimTime{0}, microseconds(600)}, {1, microseconds(600), milliseconds(1)}};
    t.span_end = milliseconds(1);
    Sample s;
    s.window_start = SimTime{0};
    s.completed = milliseconds(1);
    s.power = Watts(10e-3);
    const EnergyReport r = attribute(std::vector<Sample>{s}, t);
    EXPECT_NEAR(r.find("A")->energy.value(), 6e-6, 1e-18);
    EXPECT_NEAR(r.find("B")->energy.value(), 4e-6, 1e-18);
    EXPECT_NEAR(r.unattributed.value(), 0.0, 1e-18);
}

TEST(Attribute, IdleGoesToUnattributed)
{
    ScheduleTrace t;
    t.threads = {{"A", 1, 0, false}};
    t.entries = {{0, SimTime{0}, microseconds(250)}};
    t.span_end = milliseconds(1);
    Sample s{SimTime{0}, milliseconds(1), Volts(1.0), Amperes(0.004), Watts(0.004), 0};
    const EnergyReport r = attribute(std::vector<Sample>{s}, t);
    EXPECT_NEAR(r.find("A")->energy.value(), 1e-6, 1e-18);
    EXPECT_NEAR(r.unattributed.value(), 3e-6, 1e-18);
    EXPECT_NEAR((r.attributed() + r.unattributed).value(), r.total.value(), 1e-9 * r.total.value());
}

TEST(Attribute, NonOverlappingSpansRejected)
{
    ScheduleTrace t;
    t.threads = {{"A", 1, 0, false}};
    t.span_start = SimTime{0};
    t.span_end = milliseconds(1);
    Sample s{milliseconds(5), milliseconds(6), Volts(1.0), Amperes(0.001), Watts(0.001), -1};
    EXPECT_THROW((void)attribute(std::vector<Sample>{s}, t), InvalidParameter);
}

TEST(Attribute, SingleOwnerGetsEverything)
{
    Rig rig(cfg(332, 16));
    RunOptions o = options();
    o.measurement.t_proc = microseconds(1);
    const std::vector<ThreadSpec> threads{busy("only", 5, std::chrono::seconds(2), 0.01)};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(500), o);
    const EnergyReport rep = attribute(r.samples, r.schedule);
    const double share = rep.find("only")->energy / rep.total;
    EXPECT_GT(share, 0.999);
    EXPECT_NEAR((rep.attributed() + rep.unattributed).value(), rep.total.value(), 1e-9 * rep.total.value());
}

TEST(Attribute, SwappingIdsSwapsEnergies)
{
    auto report = [](const std::string& first, const std::string& second) {
        Rig rig(cfg(140, 4), NoiseModel{}, 5);
        std::vector<ThreadSpec> threads{
            {first, 2, {Activity::compute(microseconds(900), Amperes(0.003)), Activity::sleep(microseconds(700))}, true, SimTime{0}},
            {second, 4, {Activity::compute(microseconds(1300), Amperes(0.009))}, true, SimTime{0}}};
        const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(40), options());
        return attribute(r.samples, r.schedule);
    };
    const EnergyReport a = report("x", "y");
    const EnergyReport b = report("y", "x");
    EXPECT_EQ(a.find("x")->energy.value(), b.find("y")->energy.value());
    EXPECT_EQ(a.find("y")->energy.value(), b.find("x")->energy.value());
}

TEST(Attribute, ReportTable)
{
    EnergyReport r;
    r.threads.push_back({"radio", 2, Joules(1e-3), Watts(2e-3), 0.5, 3, Seconds(0.5)});
    r.total = Joules(1.5e-3);
    r.unattributed = Joules(0.5e-3);
    r.span = Seconds(1.0);
    const std::string s = format_es_report(r);
    EXPECT_NE(s.find("thread"), std::string::npos);
    EXPECT_NE(s.find("radio"), std::string::npos);
    EXPECT_NE(s.find("(idle)"), std::string::npos);
    EXPECT_NE(s.find("50.000%"), std::string::npos);
}

TEST(Oracle, ConstantLoadIsExact)
{
    LoadProfile p;
    p.current = PiecewiseLinear(0.01);
    p.voltage = PiecewiseLinear(2.7);
    EXPECT_NEAR(oracle_energy(p, SimTime{0}, std::chrono::seconds(1)).value(), 0.027, 1e-12);
    EXPECT_EQ(oracle_energy(p, milliseconds(3), milliseconds(3)).value(), 0.0);
    // A shortened last step still lands on the end point.
    EXPECT_NEAR(oracle_energy(p, SimTime{0}, std::chrono::nanoseconds(2500)).value(), 0.027 * 2.5e-6, 1e-18);
}

TEST(Oracle, PerThreadSumsToTotal)
{
    Rig rig(cfg(140, 4));
    std::vector<ThreadSpec> threads{
        {"a", 2, {Activity::compute(microseconds(700), Amperes(0.003)), Activity::sleep(microseconds(900))}, true, SimTime{0}},
        {"b", 4, {Activity::compute(microseconds(1300), Amperes(0.006))}, true, microseconds(50)}};
    RunOptions o = options();
    o.node.idle_current = Amperes(1e-4);
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(20), o);
    const OracleResult orc = oracle_run(r.load, r.schedule);
    double sum = orc.idle.value();
    for (const auto& t : orc.threads) {
        sum += t.energy.value();
    }
    EXPECT_NEAR(sum, orc.total.value(), 1e-12 * orc.total.value());
    // The 1 us trapezoid misses up to half a step at every current step.
    EXPECT_NEAR(orc.total.value(), r.load.voltage.at(SimTime{0}) * r.load.current.integral(SimTime{0}, milliseconds(20)),
                1e-4 * orc.total.value());
    EXPECT_THROW((void)orc.thread_energy("nobody"), InvalidParameter);
}

TEST(Oracle, IndependentOfMonitorBusAndNoise)
{
    // Peripheral-only load and a zero-current measurement thread: the
    // ground truth cannot depend on how it is observed.
    const std::vector<ThreadSpec> threads{
        {"p", 5, {Activity::io(milliseconds(7), Amperes(0.004), Amperes(0.012)), Activity::sleep(milliseconds(3))}, true, SimTime{0}}};
    std::vector<double> totals;
    for (auto [conv, avg, sigma] : {std::tuple{140, 4, 0.0}, std::tuple{332, 16, 16e-6}, std::tuple{1100, 1, 100e-6}}) {
        Rig rig(cfg(conv, avg), NoiseModel{Volts(sigma), 0.0}, 3);
        const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(60), options());
        const OracleResult orc = oracle_run(r.load, r.schedule);
        totals.push_back(orc.total.value());
    }
    EXPECT_NEAR(totals[0], totals[1], 1e-15);
    EXPECT_NEAR(totals[0], totals[2], 1e-15);
}

TEST(Trace, EmptyWindow)
{
    const std::vector<Sample> none;
    const TraceRecord t = make_trace("x", milliseconds(1), milliseconds(1), none, milliseconds(1), TraceMode::series);
    EXPECT_EQ(t.aggregate.value(), 0.0);
    EXPECT_TRUE(t.samples.empty());
    EXPECT_THROW((void)make_trace("x", milliseconds(2), milliseconds(1), none, milliseconds(1), TraceMode::series),
                 ContractViolation);
}

TEST(Trace, AggregateEqualsSeriesIntegralInBothModes)
{
    std::vector<Sample> s;
    for (int k = 0; k < 20; ++k) {
        const double p = 0.01 + 0.001 * k;
        s.push_back({milliseconds(k), milliseconds(k + 1), Volts(1.0), Amperes(p), Watts(p), 0});
    }
    const TraceRecord series = make_trace("t", microseconds(2300), microseconds(15700), s, milliseconds(1), TraceMode::series);
    const TraceRecord agg = make_trace("t", microseconds(2300), microseconds(15700), s, milliseconds(1), TraceMode::aggregate);
    EXPECT_NEAR(series.aggregate.value(), integrate(series.samples).value(), 1e-18);
    EXPECT_EQ(series.aggregate.value(), agg.aggregate.value());
    EXPECT_TRUE(agg.samples.empty());
    EXPECT_EQ(series.samples.front().t, microseconds(2300));
    EXPECT_EQ(series.samples.back().t, microseconds(15700));
    // Linear power ramp: the trapezoid is exact.
    const double expect = (0.01 * 13.4e-3) + 0.001 * (15.2 * 15.2 - 1.8 * 1.8) / 2 * 1e-3;
    EXPECT_NEAR(series.aggregate.value(), expect, 1e-12);
}

TEST(Trace, GapsAreRecordedNotBridged)
{
    std::vector<Sample> s;
    for (int k : {0, 1, 2, 7, 8}) {
        s.push_back({milliseconds(k), milliseconds(k + 1), Volts(1.0), Amperes(0.01), Watts(0.01), 0});
    }
    const TraceRecord t = make_trace("t", SimTime{0}, milliseconds(9), s, milliseconds(1), TraceMode::series);
    ASSERT_EQ(t.gaps.size(), 1u);
    EXPECT_EQ(t.gaps[0].from, microseconds(2500));
    EXPECT_EQ(t.gaps[0].to, microseconds(7500));
    EXPECT_NEAR(t.aggregate.value(), 0.01 * (9e-3 - 5e-3), 1e-15);
}

TEST(Trace, RecorderContracts)
{
    TraceRecorder rec(milliseconds(1));
    const std::vector<Sample> none;
    EXPECT_THROW((void)rec.stop("x", milliseconds(1), none), ContractViolation);
    rec.start("x", milliseconds(1));
    EXPECT_TRUE(rec.is_open("x"));
    EXPECT_THROW(rec.start("x", milliseconds(2)), ContractViolation);
    EXPECT_THROW((void)rec.stop("x", SimTime{0}, none), ContractViolation);
    const TraceRecord t = rec.stop("x", milliseconds(1), none);
    EXPECT_EQ(t.aggregate.value(), 0.0);
    EXPECT_FALSE(rec.is_open("x"));
    EXPECT_EQ(parse_trace_mode(to_string(TraceMode::aggregate)), TraceMode::aggregate);
    EXPECT_THROW((void)parse_trace_mode("both"), InvalidParameter);
}

TEST(Trace, OneSecondAt27MilliwattsThroughTheRun)
{
    Rig rig(cfg(332, 16), NoiseModel{}, 7);
    const std::vector<ThreadSpec> threads{{"load", 5,
                                           {Activity::trace_start("work"), Activity::io(std::chrono::seconds(1), Amperes(0.01)),
                                            Activity::trace_stop("work")},
                                           false, SimTime{0}}};
    const RunResult r = run(threads, rig.monitor, rig.bus, milliseconds(1200), options(2.7));
    const auto traces = collect_traces(r, rig.monitor.config().sample_period(), TraceMode::aggregate);
    ASSERT_EQ(traces.size(), 1u);
    EXPECT_EQ(traces[0].label, "work");
    EXPECT_NEAR(traces[0].aggregate.value(), 0.027, 0.027 * 0.005);
}
