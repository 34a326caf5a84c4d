#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "insitu/errors.hpp"
#include "insitu/harvest.hpp"

using namespace insitu;
using std::chrono::hours;
using std::chrono::milliseconds;
using std::chrono::seconds;

namespace {

TraceRecord traced(double joules)
{
    TraceRecord t;
    t.label = "task";
    t.aggregate = Joules(joules);
    return t;
}

HarvestConfig small_store(double v_now, Watts solar, double sleep_ua = 12.0)
{
    HarvestConfig c;
    c.cap.capacitance = Farads(10.0);
    c.cap.v_now = Volts(v_now);
    c.solar = SolarProfile::constant(solar);
    c.node_sleep_current = Amperes(sleep_ua * 1e-6);
    return c;
}

PowerSubsystem subsystem(const HarvestConfig& c, NoiseModel noise = NoiseModel::ideal())
{
    static const BusCostModel model;
    return PowerSubsystem(c, noise, 1, model, {SpeedMode::high, Ohms(2200.0)});
}

}  // namespace

TEST(CapStep, ExtractTwentyJoules)
{
    SuperCap cap;
    cap.v_now = Volts(2.0);
    const CapStepResult r = cap_step(cap, Watts(-20.0), Seconds(1.0));
    EXPECT_NEAR(r.cap.v_now.value(), std::sqrt(3.6), 1e-12);
    EXPECT_NEAR(r.cap.v_now.value(), 1.897, 5e-4);
    EXPECT_NEAR(r.delta.value(), -20.0, 1e-9);
}

TEST(CapStep, ZeroPowerKeepsVoltage)
{
    SuperCap cap;
    cap.v_now = Volts(2.2);
    EXPECT_EQ(cap_step(cap, Watts(0.0), Seconds(10.0)).cap.v_now.value(), 2.2);
}

TEST(CapStep, FullStoreRefusesCharge)
{
    const SuperCap cap;  // at v_max
    const CapStepResult r = cap_step(cap, Watts(0.025), Seconds(4.0));
    EXPECT_EQ(r.cap.v_now.value(), cap.v_max.value());
    EXPECT_NEAR(r.unharvested.value(), 0.1, 1e-12);
    EXPECT_EQ(r.delta.value(), 0.0);
}

TEST(CapStep, EmptyStoreRecordsShortfall)
{
    SuperCap cap;
    cap.capacitance = Farads(1.0);
    cap.v_now = Volts(1.0);
    const CapStepResult r = cap_step(cap, Watts(-1.0), Seconds(1.0));
    EXPECT_EQ(r.cap.v_now.value(), 0.0);
    EXPECT_NEAR(r.shortfall.value(), 0.5, 1e-12);
    EXPECT_THROW((void)cap_step(cap, Watts(1.0), Seconds(0.0)), InvalidParameter);
}

TEST(CapStep, VoltageStaysInRange)
{
    SuperCap cap;
    cap.capacitance = Farads(2.0);
    cap.v_now = Volts(1.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> p(-3.0, 3.0);
    for (int i = 0; i < 5000; ++i) {
        cap = cap_step(cap, Watts(p(rng)), Seconds(0.5)).cap;
        ASSERT_GE(cap.v_now.value(), 0.0);
        ASSERT_LE(cap.v_now.value(), cap.v_max.value());
    }
}

TEST(SuperCap, Validation)
{
    SuperCap c;
    c.v_now = Volts(3.0);
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = SuperCap{};
    c.capacitance = Farads(-1.0);
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Solar, DiurnalEnergyIsExact)
{
    const SolarProfile s = SolarProfile::diurnal(Watts(0.06), Seconds(6 * 3600.0), Seconds(18 * 3600.0));
    EXPECT_EQ(s.power_at(hours(3)).value(), 0.0);
    EXPECT_NEAR(s.power_at(hours(12)).value(), 0.06, 1e-12);
    EXPECT_TRUE(s.daylight(hours(7)));
    EXPECT_FALSE(s.daylight(hours(19)));
    // Half-sine: peak * 2 * L / pi over the day.
    EXPECT_NEAR(s.energy(SimTime{0}, hours(24)).value(), 0.06 * 2 * 12 * 3600 / M_PI, 1e-6);
    EXPECT_NEAR(s.energy(SimTime{0}, hours(48)).value(), 2 * 0.06 * 2 * 12 * 3600 / M_PI, 1e-6);
    double num = 0.0;
    for (int k = 0; k < 3600; ++k) {
        num += s.power_at(hours(8) + seconds(k) + milliseconds(500)).value();
    }
    EXPECT_NEAR(s.energy(hours(8), hours(9)).value(), num, 1e-6 * num);
    EXPECT_THROW((void)SolarProfile::diurnal(Watts(0.06), Seconds(10.0), Seconds(5.0)), InvalidParameter);
    EXPECT_THROW((void)SolarProfile::constant(Watts(-1.0)), InvalidParameter);
}

TEST(Solar, TableIsPiecewiseLinear)
{
    PiecewiseLinear pts;
    pts.append(SimTime{0}, 0.0);
    pts.append(seconds(10), 0.01);
    const SolarProfile s = SolarProfile::table(pts);
    EXPECT_NEAR(s.power_at(seconds(5)).value(), 0.005, 1e-15);
    EXPECT_NEAR(s.energy(SimTime{0}, seconds(20)).value(), 0.05 + 0.1, 1e-12);
}

TEST(AdaptInterval, Examples)
{
    const DutyCycleState s0 = DutyCycleState::initial({});
    EXPECT_NEAR(adapt_interval(s0, traced(0.5), Watts(0.025)).interval.value(), 25.0, 1e-9);
    EXPECT_EQ(adapt_interval(s0, traced(0.5), Watts(0.0)).interval.value(), 600.0);
    EXPECT_EQ(adapt_interval(s0, traced(0.5), Watts(10.0)).interval.value(), 10.0);
    EXPECT_THROW((void)adapt_interval(s0, traced(0.0), Watts(0.025)), InvalidParameter);
}

TEST(AdaptInterval, EwmaAfterFirstObservation)
{
    DutyCycleState s = adapt_interval(DutyCycleState::initial({}), traced(0.5), Watts(0.025));
    s = adapt_interval(s, traced(1.0), Watts(0.025));
    EXPECT_NEAR(s.task_energy_estimate.value(), 0.8 * 0.5 + 0.2 * 1.0, 1e-15);
    EXPECT_NEAR(s.interval.value(), 0.6 / (0.8 * 0.025), 1e-9);
}

TEST(AdaptInterval, Monotone)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> e(0.01, 5.0);
    std::uniform_real_distribution<double> p(0.0, 0.2);
    const DutyCycleState s0 = DutyCycleState::initial({});
    for (int i = 0; i < 2000; ++i) {
        const double energy = e(rng);
        const double pa = p(rng);
        const double pb = pa + p(rng);
        EXPECT_GE(adapt_interval(s0, traced(energy), Watts(pa)).interval.value(),
                  adapt_interval(s0, traced(energy), Watts(pb)).interval.value());
        EXPECT_LE(adapt_interval(s0, traced(energy), Watts(pa)).interval.value(),
                  adapt_interval(s0, traced(energy * 1.5), Watts(pa)).interval.value());
    }
}

TEST(DutyCycleParams, Validation)
{
    DutyCycleParams p;
    p.interval_min = Seconds(700.0);
    EXPECT_THROW(p.validate(), InvalidParameter);
    p = DutyCycleParams{};
    p.alpha = 0.0;
    EXPECT_THROW(p.validate(), InvalidParameter);
}

TEST(MeasureCharging, PanelMinusSleepLoad)
{
    PowerSubsystem ps = subsystem(small_store(2.5, Watts(0.025)));
    const Watts got = ps.measure_charging();
    EXPECT_NEAR(got.value(), 0.025 - 2.5 * 12e-6, 0.025 * 0.002);
    EXPECT_LT(std::abs(ps.ledger().relative_residual()), 1e-9);
}

TEST(MeasureCharging, NightReadsNearZero)
{
    PowerSubsystem ps = subsystem(small_store(2.5, Watts(0.0)), NoiseModel{});
    EXPECT_NEAR(ps.measure_charging().value(), -2.5 * 12e-6, 10e-6);
}

TEST(MeasureCharging, FullStoreUnderReports)
{
    PowerSubsystem ps = subsystem(small_store(2.7, Watts(0.025)));
    const Watts got = ps.measure_charging();
    EXPECT_LT(got.value(), 0.025 * 0.5);
    EXPECT_GT(ps.ledger().unharvested.value(), 0.0);
}

TEST(MeasureCharging, BusyWhileConverting)
{
    HarvestConfig c = small_store(2.5, Watts(0.025));
    PowerSubsystem ps = subsystem(c);
    ps.monitor().configure(c.charge_window, ps.now());
    ps.monitor().trigger_single(ps.now());
    EXPECT_THROW((void)ps.measure_charging(), BusyError);
}

TEST(IsolatedConsumption, ConstantLoad)
{
    PowerSubsystem ps = subsystem(small_store(2.5, Watts(0.02)), NoiseModel{});
    const Watts got = ps.isolated_consumption(Watts(0.027), seconds(1));
    EXPECT_NEAR(got.value(), 0.027 + 2.5 * 12e-6, 0.027 * 0.003);
    EXPECT_TRUE(ps.charging());
}

TEST(IsolatedConsumption, SleepOnlyGivesSleepPower)
{
    PowerSubsystem ps = subsystem(small_store(2.5, Watts(0.0), 400.0));
    EXPECT_NEAR(ps.isolated_consumption(Watts(0.0), seconds(1)).value(), 2.5 * 400e-6, 2.5 * 400e-6 * 0.01);
}

TEST(IsolatedConsumption, IndependentOfSolar)
{
    PowerSubsystem dark = subsystem(small_store(2.5, Watts(0.0)), NoiseModel{});
    PowerSubsystem sunny = subsystem(small_store(2.5, Watts(0.05)), NoiseModel{});
    EXPECT_EQ(dark.isolated_consumption(Watts(0.01), seconds(1)).value(),
              sunny.isolated_consumption(Watts(0.01), seconds(1)).value());
    EXPECT_THROW((void)dark.isolated_consumption(Watts(0.01), milliseconds(1)), InvalidParameter);
}

TEST(DayCycle, ShortRunConservesEnergy)
{
    HarvestConfig c;
    c.cap.capacitance = Farads(5.0);
    c.cap.v_now = Volts(2.0);
    c.solar = SolarProfile::diurnal(Watts(0.06), Seconds(0.0), Seconds(3 * 3600.0));
    PowerSubsystem ps = subsystem(c, NoiseModel{});
    const std::vector<ThreadSpec> task{
        {"sensor", 5, {Activity::trace_start("t"), Activity::io(milliseconds(400), Amperes(0.02)), Activity::trace_stop("t")}, false, SimTime{0}}};
    RunOptions o;
    o.node.idle_current = Amperes(50e-6);
    DutyCycleParams d;
    d.interval_initial = Seconds(60.0);
    const DayCycleResult r = run_day_cycle(ps, task, milliseconds(500), o, d, hours(4));
    ASSERT_FALSE(r.events.empty());
    EXPECT_LT(std::abs(r.ledger.relative_residual()), 1e-6);
    for (const auto& v : r.voltage) {
        ASSERT_GE(v.v.value(), 0.0);
        ASSERT_LE(v.v.value(), c.cap.v_max.value());
    }
    for (const auto& e : r.events) {
        EXPECT_GE(e.interval.value(), d.interval_min.value());
        EXPECT_LE(e.interval.value(), d.interval_max.value());
        if (!e.skipped) {
            EXPECT_NEAR(e.traced.value(), e.true_energy.value(), 0.03 * e.true_energy.value());
        }
    }
    const auto bins = bin_day(r.events, r.voltage, hours(1), hours(4));
    ASSERT_EQ(bins.size(), 4u);
    for (const auto& b : bins) {
        EXPECT_LE(b.p_use.value(), 0.0);
        EXPECT_GE(b.p_charge.value(), 0.0);
    }
    EXPECT_EQ(bins[3].p_charge.value(), 0.0);  // after sunset
    EXPECT_THROW((void)bin_day(r.events, r.voltage, SimTime{0}, hours(4)), InvalidParameter);
}
