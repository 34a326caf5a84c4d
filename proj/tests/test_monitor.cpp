#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "insitu/errors.hpp"
#include "insitu/shunt_monitor.hpp"

using namespace insitu;
using std::chrono::microseconds;
using std::chrono::milliseconds;

namespace {

LoadProfile constant_load(double amps, double volts)
{
    LoadProfile p;
    p.current = PiecewiseLinear(amps);
    p.voltage = PiecewiseLinear(volts);
    return p;
}

MonitorConfig averaged_config()
{
    return {microseconds(332), microseconds(332), 16, MonitorMode::continuous, true};
}

double stddev(const std::vector<double>& v)
{
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST(MonitorConfig, SamplePeriodAndValidation)
{
    EXPECT_EQ(averaged_config().sample_period(), microseconds(10624));
    MonitorConfig bad = averaged_config();
    bad.shunt_conv = microseconds(333);
    try {
        bad.validate();
        FAIL();
    } catch (const InvalidParameter& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("333"), std::string::npos);
        EXPECT_NE(msg.find("8244"), std::string::npos) << "message should list the allowed set: " << msg;
    }
    bad = averaged_config();
    bad.averaging = 3;
    EXPECT_THROW(bad.validate(), InvalidParameter);
    for (int us : kConversionTimesUs) {
        EXPECT_TRUE(is_valid_conversion_time(microseconds(us)));
    }
    for (int n : kAveragingCounts) {
        EXPECT_TRUE(is_valid_averaging(n));
    }
}

TEST(MonitorConfig, RegisterImage)
{
    // Bit 14 reads back as one on this device family. AVG=16 -> 2,
    // VBUSCT=332 -> 2, VSHCT=332 -> 2, continuous shunt+bus -> 7.
    EXPECT_EQ(averaged_config().encode(), (1u << 14) | (2u << 9) | (2u << 6) | (2u << 3) | 7u);
}

TEST(Monitor, OneEventPerSamplePeriod)
{
    ShuntMonitor m(averaged_config(), Ohms(2.0), NoiseModel::ideal());
    const auto load = constant_load(0.02, 2.7);
    auto ev = m.advance(load, microseconds(10623));
    EXPECT_TRUE(ev.empty());
    ev = m.advance(load, microseconds(10624));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].completed, microseconds(10624));
    EXPECT_EQ(ev[0].window_start, SimTime{0});
    EXPECT_TRUE(ev[0].alert);
    ev = m.advance(load, microseconds(10624 * 5));
    EXPECT_EQ(ev.size(), 4u);
}

TEST(Monitor, PowerDownProducesNothing)
{
    MonitorConfig cfg = averaged_config();
    cfg.mode = MonitorMode::power_down;
    ShuntMonitor m(cfg, Ohms(2.0), NoiseModel::ideal());
    EXPECT_TRUE(m.advance(constant_load(0.02, 2.7), std::chrono::seconds(10)).empty());
    EXPECT_EQ(m.peek(reg::current), 0);
    EXPECT_LE(m.supply().sleep_current.value(), 2e-6);
    EXPECT_EQ(m.active_time().value(), 0.0);
}

TEST(Monitor, TwentyMilliampsIdeal)
{
    ShuntMonitor m(averaged_config(), Ohms(2.0), NoiseModel::ideal());
    const auto ev = m.advance(constant_load(0.02, 2.7), microseconds(10624));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(m.peek(reg::current), 16000);
    EXPECT_EQ(m.decode_current(m.peek(reg::current)).value(), 0.02);
    EXPECT_EQ(m.peek(reg::bus_voltage), 2160);
    EXPECT_NEAR(m.decode_power(m.peek(reg::power)).value(), 0.054, m.power_lsb().value());
    // Current register tracks the shunt register via the LSB relation.
    EXPECT_NEAR(m.decode_shunt_voltage(m.peek(reg::shunt_voltage)).value() / 2.0,
                m.decode_current(m.peek(reg::current)).value(), m.current_lsb().value());
}

TEST(Monitor, IdealErrorWithinHalfLsbAcrossRange)
{
    const double lsb = 1.25e-6;
    for (double i = 1e-6; i <= 40.96e-3; i *= 1.07) {
        ShuntMonitor m({microseconds(140), microseconds(140), 1, MonitorMode::continuous, true}, Ohms(2.0),
                       NoiseModel::ideal());
        const auto ev = m.advance(constant_load(i, 3.0), microseconds(280));
        ASSERT_EQ(ev.size(), 1u);
        EXPECT_LE(std::abs(ev[0].current.value() - i), lsb / 2 * (1 + 1e-9)) << "at " << i;
        EXPECT_FALSE(ev[0].saturated);
    }
}

TEST(Monitor, OverRangeSaturatesAndFlags)
{
    ShuntMonitor m({microseconds(140), microseconds(140), 1, MonitorMode::continuous, true}, Ohms(2.0),
                   NoiseModel::ideal());
    const auto ev = m.advance(constant_load(0.05, 3.0), microseconds(280));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_TRUE(ev[0].saturated);
    EXPECT_TRUE(m.overflow());
    EXPECT_NE(m.peek(reg::alert) & reg::overflow_flag, 0);
}

TEST(Monitor, AdvanceBackwardsIsContractViolation)
{
    ShuntMonitor m(averaged_config(), Ohms(2.0));
    (void)m.advance(constant_load(0.0, 3.0), milliseconds(5));
    EXPECT_THROW((void)m.advance(constant_load(0.0, 3.0), milliseconds(4)), ContractViolation);
}

TEST(Monitor, TriggeredSingleConversion)
{
    MonitorConfig cfg{microseconds(1100), microseconds(1100), 64, MonitorMode::triggered, true};
    ShuntMonitor m(cfg, Ohms(2.0), NoiseModel::ideal());
    const auto load = constant_load(0.001, 3.0);
    m.trigger_single(milliseconds(1));
    EXPECT_TRUE(m.busy());
    EXPECT_THROW(m.trigger_single(milliseconds(2)), BusyError);
    EXPECT_EQ(m.next_completion(), milliseconds(1) + microseconds(140800));
    auto ev = m.advance(load, milliseconds(200));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].completed, milliseconds(1) + microseconds(140800));
    EXPECT_FALSE(m.busy());
    EXPECT_TRUE(m.advance(load, milliseconds(400)).empty());
}

TEST(Monitor, TriggerOutsideTriggeredModeIsModeError)
{
    MonitorConfig cfg = averaged_config();
    cfg.mode = MonitorMode::power_down;
    ShuntMonitor m(cfg, Ohms(2.0));
    EXPECT_THROW(m.trigger_single(SimTime{0}), ModeError);
    ShuntMonitor c(averaged_config(), Ohms(2.0));
    EXPECT_THROW(c.trigger_single(SimTime{0}), ModeError);
}

TEST(Monitor, ReadRegisterChargesBusAndLatches)
{
    const BusCostModel model;
    BusLink bus(model, {SpeedMode::high, Ohms(2200.0)});
    ShuntMonitor m(averaged_config(), Ohms(2.0), NoiseModel{}, 9);
    (void)m.advance(constant_load(0.003, 2.7), microseconds(10624));
    const RegisterRead a = m.read_register(reg::current, bus);
    const RegisterRead b = m.read_register(reg::current, bus);
    EXPECT_EQ(a.code, b.code);
    EXPECT_NEAR(a.cost.time.value(), 33e-6, 1e-15);
    EXPECT_EQ(bus.reads(), 2);

    EXPECT_TRUE(m.conversion_ready());
    (void)m.read_register(reg::alert, bus);
    EXPECT_FALSE(m.conversion_ready());
    EXPECT_THROW((void)m.read_register(0x05, bus), InvalidParameter);
    EXPECT_THROW((void)m.peek(0x7F), InvalidParameter);
}

TEST(Monitor, SameSeedSameCodes)
{
    const auto load = constant_load(200e-6, 2.7);
    ShuntMonitor a(averaged_config(), Ohms(2.0), NoiseModel{}, 42);
    ShuntMonitor b(averaged_config(), Ohms(2.0), NoiseModel{}, 42);
    const auto ea = a.advance(load, milliseconds(500));
    const auto eb = b.advance(load, milliseconds(500));
    ASSERT_EQ(ea.size(), eb.size());
    for (std::size_t i = 0; i < ea.size(); ++i) {
        EXPECT_EQ(ea[i].completed, eb[i].completed);
        EXPECT_EQ(ea[i].shunt_code, eb[i].shunt_code);
    }
}

TEST(Monitor, AveragingReducesNoiseBySqrtN)
{
    // Large sigma so quantization does not dominate.
    const NoiseModel noise{Volts(200e-6), 0.0};
    const auto load = constant_load(0.01, 3.0);
    auto spread = [&](int avg) {
        ShuntMonitor m({microseconds(140), microseconds(140), avg, MonitorMode::continuous, true}, Ohms(2.0), noise, 77);
        std::vector<double> v;
        const auto ev = m.advance(load, microseconds(280) * avg * 4000);
        for (const auto& e : ev) {
            v.push_back(e.current.value());
        }
        return stddev(v);
    };
    const double s1 = spread(1);
    const double s16 = spread(16);
    EXPECT_NEAR(s1 / s16, 4.0, 0.4);
}

TEST(Monitor, SupplyEnergySplitsActiveAndSleep)
{
    MonitorConfig cfg{microseconds(1100), microseconds(1100), 64, MonitorMode::triggered, true};
    const MonitorSupply supply;
    ShuntMonitor m(cfg, Ohms(2.0), NoiseModel::ideal(), 0, supply);
    m.trigger_single(SimTime{0});
    (void)m.advance(constant_load(0.0, 3.0), std::chrono::seconds(1));
    const double active = 0.1408;
    EXPECT_NEAR(m.active_time().value(), active, 1e-12);
    EXPECT_NEAR(m.sleep_time().value(), 1.0 - active, 1e-12);
    EXPECT_NEAR(m.supply_energy().value(),
                supply.active.value() * active + supply.sleep().value() * (1.0 - active), 1e-15);
}

TEST(NoiseModel, Validation)
{
    EXPECT_THROW((NoiseModel{Volts(-1e-6), 0.0}.validate()), InvalidParameter);
    EXPECT_THROW((NoiseModel{Volts(1e-6), 0.02}.validate()), InvalidParameter);
    MonitorSupply s;
    s.sleep_current = Amperes(3e-6);
    EXPECT_THROW(s.validate(), InvalidParameter);
}
