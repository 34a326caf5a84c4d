#include "insitu/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "insitu/errors.hpp"

namespace insitu {

namespace {

constexpr double kDay = 86400.0;

double seconds_of(SimTime t) { return to_seconds(t).value(); }

}  // namespace

void SuperCap::validate() const
{
    if (!(capacitance.value() > 0.0)) {
        throw InvalidParameter("store capacitance must be positive");
    }
    if (!(v_max.value() > 0.0)) {
        throw InvalidParameter("store v_max must be positive");
    }
    if (v_now.value() < 0.0 || v_now > v_max) {
        throw InvalidParameter("store voltage must lie in [0, v_max]");
    }
    if (v_min_operating.value() < 0.0 || v_min_operating > v_max) {
        throw InvalidParameter("store v_min_operating must lie in [0, v_max]");
    }
}

CapStepResult cap_step(const SuperCap& cap, Watts p_net, Seconds dt)
{
    if (!(dt.value() > 0.0)) {
        throw InvalidParameter("cap_step needs a positive time step");
    }
    const double c = cap.capacitance.value();
    const double e0 = cap.energy().value();
    const double e_max = 0.5 * c * cap.v_max.value() * cap.v_max.value();
    const double wanted = e0 + p_net.value() * dt.value();

    CapStepResult r;
    r.cap = cap;
    double e1 = wanted;
    if (wanted > e_max) {
        e1 = std::max(e0, e_max);
        r.unharvested = Joules(wanted - e1);
    } else if (wanted < 0.0) {
        e1 = 0.0;
        r.shortfall = Joules(-wanted);
    }
    r.cap.v_now = Volts(std::min(cap.v_max.value(), std::sqrt(2.0 * e1 / c)));
    r.delta = Joules(e1 - e0);
    return r;
}

SolarProfile SolarProfile::constant(Watts p)
{
    if (p.value() < 0.0) {
        throw InvalidParameter("solar power must not be negative");
    }
    SolarProfile s;
    s.kind_ = Kind::constant;
    s.peak_ = p;
    return s;
}

SolarProfile SolarProfile::table(PiecewiseLinear points)
{
    if (points.empty()) {
        throw InvalidParameter("solar table needs at least one point");
    }
    for (const auto& p : points.points()) {
        if (p.value < 0.0) {
            throw InvalidParameter("solar table has a negative power");
        }
    }
    SolarProfile s;
    s.kind_ = Kind::table;
    s.table_ = std::move(points);
    return s;
}

SolarProfile SolarProfile::diurnal(Watts peak, Seconds sunrise, Seconds sunset)
{
    if (peak.value() < 0.0) {
        throw InvalidParameter("solar peak must not be negative");
    }
    if (sunrise.value() < 0.0 || !(sunrise < sunset) || sunset.value() > kDay) {
        throw InvalidParameter("solar needs 0 <= sunrise < sunset <= 24 h");
    }
    SolarProfile s;
    s.kind_ = Kind::diurnal;
    s.peak_ = peak;
    s.sunrise_ = sunrise;
    s.sunset_ = sunset;
    return s;
}

Watts SolarProfile::power_at(SimTime t) const
{
    switch (kind_) {
    case Kind::constant: return peak_;
    case Kind::table: return Watts(table_.at(t));
    case Kind::diurnal: {
        const double tod = std::fmod(seconds_of(t), kDay);
        const double rise = sunrise_.value();
        const double len = sunset_.value() - rise;
        if (tod < rise || tod >= sunset_.value()) {
            return Watts(0.0);
        }
        return Watts(peak_.value() * std::sin(std::numbers::pi * (tod - rise) / len));
    }
    }
    return Watts(0.0);
}

Joules SolarProfile::energy(SimTime t0, SimTime t1) const
{
    if (t1 <= t0) {
        return Joules(0.0);
    }
    switch (kind_) {
    case Kind::constant: return peak_ * to_seconds(t1 - t0);
    case Kind::table: return Joules(table_.integral(t0, t1));
    case Kind::diurnal: {
        const double a0 = seconds_of(t0);
        const double a1 = seconds_of(t1);
        const double rise = sunrise_.value();
        const double len = sunset_.value() - rise;
        double sum = 0.0;
        for (double day = std::floor(a0 / kDay) * kDay; day < a1; day += kDay) {
            const double a = std::max(a0, day + rise);
            const double b = std::min(a1, day + sunset_.value());
            if (b > a) {
                sum += peak_.value() * len / std::numbers::pi *
                       (std::cos(std::numbers::pi * (a - day - rise) / len) -
                        std::cos(std::numbers::pi * (b - day - rise) / len));
            }
        }
        return Joules(sum);
    }
    }
    return Joules(0.0);
}

void DutyCycleParams::validate() const
{
    if (!(interval_min.value() > 0.0) || interval_max < interval_min) {
        throw InvalidParameter("duty cycle needs 0 < interval_min <= interval_max");
    }
    if (interval_initial < interval_min || interval_initial > interval_max) {
        throw InvalidParameter("duty cycle interval_initial must lie in [interval_min, interval_max]");
    }
    if (!(headroom > 0.0)) {
        throw InvalidParameter("duty cycle headroom must be positive");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidParameter("duty cycle alpha must lie in (0, 1]");
    }
    if (!(epsilon.value() > 0.0)) {
        throw InvalidParameter("duty cycle epsilon must be positive");
    }
}

DutyCycleState DutyCycleState::initial(const DutyCycleParams& params)
{
    params.validate();
    DutyCycleState s;
    s.params = params;
    s.interval = params.interval_initial;
    return s;
}

DutyCycleState adapt_interval(const DutyCycleState& state, const TraceRecord& traced, Watts charging)
{
    if (!(traced.aggregate.value() > 0.0)) {
        throw InvalidParameter("adapt_interval needs a traced task with positive energy");
    }
    const DutyCycleParams& p = state.params;
    DutyCycleState s = state;
    if (!s.primed) {
        s.task_energy_estimate = traced.aggregate;
        s.harvest_power_estimate = charging;
        s.primed = true;
    } else {
        s.task_energy_estimate = traced.aggregate * p.alpha + s.task_energy_estimate * (1.0 - p.alpha);
        s.harvest_power_estimate = charging * p.alpha + s.harvest_power_estimate * (1.0 - p.alpha);
    }
    const double guard = std::max(s.harvest_power_estimate.value(), p.epsilon.value());
    const double raw = s.task_energy_estimate.value() / (p.headroom * guard);
    s.interval = Seconds(std::clamp(raw, p.interval_min.value(), p.interval_max.value()));
    return s;
}

double EnergyLedger::relative_residual() const
{
    const double scale = std::max({std::abs(start.value()), std::abs(end.value()), std::abs(in.value()),
                                   std::abs(out.value()), std::abs(overhead.value()), std::abs(unharvested.value()),
                                   1e-12});
    return std::abs(residual().value()) / scale;
}

void HarvestConfig::validate() const
{
    cap.validate();
    if (!(charger_efficiency > 0.0 && charger_efficiency <= 1.0)) {
        throw InvalidParameter("charger efficiency must lie in (0, 1]");
    }
    if (node_sleep_current.value() < 0.0) {
        throw InvalidParameter("node sleep current must not be negative");
    }
    if (!(r_shunt.value() > 0.0)) {
        throw InvalidParameter("shunt resistance must be positive");
    }
    charge_window.validate();
    if (charge_window.mode != MonitorMode::triggered) {
        throw InvalidParameter("charging window must use triggered mode");
    }
    task_sampling.validate();
    if (task_sampling.mode != MonitorMode::continuous) {
        throw InvalidParameter("task sampling must use continuous mode");
    }
    if (max_step <= SimTime{0} || window_step <= SimTime{0}) {
        throw InvalidParameter("harvest step sizes must be positive");
    }
}

namespace {

MonitorConfig powered_down(MonitorConfig cfg)
{
    cfg.mode = MonitorMode::power_down;
    return cfg;
}

}  // namespace

PowerSubsystem::PowerSubsystem(HarvestConfig cfg, NoiseModel noise, std::uint64_t seed, const BusCostModel& bus_model,
                               BusConfig bus_cfg, MonitorSupply supply)
    : cfg_((cfg.validate(), std::move(cfg))),
      cap_(cfg_.cap),
      monitor_(powered_down(cfg_.charge_window), cfg_.r_shunt, noise, seed, supply),
      bus_(bus_model, bus_cfg)
{
    ledger_.start = cap_.energy();
    ledger_.end = ledger_.start;
    vlog_.push_back({now_, cap_.v_now});
}

Amperes PowerSubsystem::step(SimTime dt, Watts node_power, std::optional<Joules> shunt_loss)
{
    const Seconds span = to_seconds(dt);
    const Joules offered = cfg_.solar.energy(now_, now_ + dt);
    const Joules e_in = charging_ ? offered * cfg_.charger_efficiency : Joules(0.0);
    if (!charging_) {
        ledger_.disabled += offered;
    }
    const Joules e_node = node_power * span;
    const double v = cap_.v_now.value();
    const double i_guess = v > 0.0 ? (e_node - e_in).value() / span.value() / v : 0.0;
    const Joules loss = shunt_loss ? *shunt_loss : Joules(i_guess * i_guess * cfg_.r_shunt.value() * span.value());

    const Watts p_net = (e_in - e_node - loss) / span;
    const CapStepResult r = cap_step(cap_, p_net, span);
    cap_ = r.cap;
    ledger_.in += e_in;
    ledger_.out += e_node - r.shortfall;
    ledger_.overhead += loss;
    ledger_.shunt_loss += loss;
    ledger_.unharvested += r.unharvested;
    ledger_.shortfall += r.shortfall;
    ledger_.end = cap_.energy();
    now_ += dt;

    // What actually flowed through the shunt: the charger throttles when full.
    const double flowed = (e_node - r.shortfall - e_in + r.unharvested).value();
    return Amperes(v > 0.0 ? flowed / span.value() / v : 0.0);
}

void PowerSubsystem::sync_overhead()
{
    const Joules monitor_now = monitor_.supply_energy();
    const Joules bus_now = bus_.total_energy();
    const Joules e = (monitor_now - monitor_seen_) + (bus_now - bus_seen_);
    ledger_.monitor += monitor_now - monitor_seen_;
    ledger_.bus += bus_now - bus_seen_;
    monitor_seen_ = monitor_now;
    bus_seen_ = bus_now;
    if (e.value() <= 0.0) {
        return;
    }
    // Applied as an instantaneous withdrawal: p * 1 s == e.
    const CapStepResult r = cap_step(cap_, Watts(-e.value()), Seconds(1.0));
    cap_ = r.cap;
    ledger_.overhead += e - r.shortfall;
    ledger_.shortfall += r.shortfall;
    ledger_.end = cap_.energy();
}

void PowerSubsystem::idle_until(SimTime t)
{
    if (t < now_) {
        throw ContractViolation("power subsystem cannot move backwards in time");
    }
    const LoadProfile none;
    while (now_ < t) {
        const SimTime dt = std::min(cfg_.max_step, t - now_);
        step(dt, cap_.v_now * cfg_.node_sleep_current);
        monitor_.advance(none, now_);
        sync_overhead();
        vlog_.push_back({now_, cap_.v_now});
    }
}

Watts PowerSubsystem::read_power()
{
    const auto cur = monitor_.read_register(reg::current, bus_);
    const auto vbus = monitor_.read_register(reg::bus_voltage, bus_);
    return monitor_.decode_bus_voltage(vbus.code) * monitor_.decode_current(cur.code);
}

Watts PowerSubsystem::measure_charging()
{
    if (monitor_.busy()) {
        throw BusyError("charging measurement requested while a conversion is in flight");
    }
    const bool previous = charging_;
    charging_ = true;
    monitor_.advance(LoadProfile{}, now_);
    sync_overhead();
    monitor_.configure(cfg_.charge_window, now_);
    monitor_.trigger_single(now_);
    const SimTime end = now_ + cfg_.charge_window.sample_period();

    LoadProfile seen;
    while (now_ < end) {
        const SimTime t = now_;
        const SimTime dt = std::min(cfg_.window_step, end - now_);
        const Volts v = cap_.v_now;
        const Amperes i = step(dt, v * cfg_.node_sleep_current);
        seen.current.append(t, i.value());
        seen.current.append(now_, i.value());
        seen.voltage.append(t, v.value());
        seen.voltage.append(now_, v.value());
    }
    monitor_.advance(seen, end);
    const Watts p = read_power();
    monitor_.configure(powered_down(cfg_.charge_window), now_);
    sync_overhead();
    vlog_.push_back({now_, cap_.v_now});
    charging_ = previous;
    return -p;
}

Watts PowerSubsystem::isolated_consumption(Watts node_power, SimTime window)
{
    if (node_power.value() < 0.0) {
        throw InvalidParameter("node power must not be negative");
    }
    if (window < cfg_.task_sampling.sample_period()) {
        throw InvalidParameter("isolated consumption window is shorter than one sample period");
    }
    if (monitor_.busy()) {
        throw BusyError("consumption measurement requested while a conversion is in flight");
    }
    const bool previous = charging_;
    charging_ = false;
    monitor_.advance(LoadProfile{}, now_);
    sync_overhead();
    monitor_.configure(cfg_.task_sampling, now_);
    const SimTime end = now_ + window;

    LoadProfile seen;
    while (now_ < end) {
        const SimTime t = now_;
        const SimTime dt = std::min(cfg_.window_step, end - now_);
        const Volts v = cap_.v_now;
        const Amperes i = step(dt, node_power + v * cfg_.node_sleep_current);
        seen.current.append(t, i.value());
        seen.current.append(now_, i.value());
        seen.voltage.append(t, v.value());
        seen.voltage.append(now_, v.value());
    }
    const auto events = monitor_.advance(seen, end);
    double sum = 0.0;
    for (const auto& ev : events) {
        bus_.charge_read();
        bus_.charge_read();
        sum += ev.power().value();
    }
    monitor_.configure(powered_down(cfg_.task_sampling), now_);
    sync_overhead();
    vlog_.push_back({now_, cap_.v_now});
    charging_ = previous;
    return Watts(sum / static_cast<double>(events.size()));
}

TaskOutcome PowerSubsystem::run_task(std::span<const ThreadSpec> threads, SimTime duration, RunOptions options)
{
    if (duration <= SimTime{0}) {
        throw InvalidParameter("task duration must be positive");
    }
    const bool previous = charging_;
    charging_ = false;
    monitor_.advance(LoadProfile{}, now_);
    sync_overhead();
    options.node.supply = cap_.v_now;
    monitor_.configure(cfg_.task_sampling, now_);

    TaskOutcome out;
    const SimTime t0 = now_;
    out.run = run(threads, monitor_, bus_, duration, options);
    const double v = cap_.v_now.value();
    out.true_energy = Joules(v * out.run.load.current.integral(t0, t0 + duration));
    const Joules loss(cfg_.r_shunt.value() * out.run.load.current.integral_of_square(t0, t0 + duration));
    step(duration, out.true_energy / to_seconds(duration), loss);

    monitor_.configure(powered_down(cfg_.task_sampling), now_);
    sync_overhead();
    vlog_.push_back({now_, cap_.v_now});
    charging_ = previous;

    out.traces = collect_traces(out.run, cfg_.task_sampling.sample_period(), TraceMode::series);
    for (const auto& t : out.traces) {
        out.traced += t.aggregate;
    }
    return out;
}

DayCycleResult run_day_cycle(PowerSubsystem& power, std::span<const ThreadSpec> task, SimTime task_duration,
                             const RunOptions& options, const DutyCycleParams& duty, SimTime duration)
{
    DutyCycleState state = DutyCycleState::initial(duty);
    DayCycleResult res;
    const SimTime end = power.now() + duration;
    const SimTime window = power.config().charge_window.sample_period();
    const SimTime longest = to_sim_time(duty.interval_max);

    while (power.now() < end) {
        const SimTime t0 = power.now();
        if (t0 + task_duration + window > end) {
            break;
        }
        if (power.cap().v_now < power.cap().v_min_operating) {
            res.events.push_back({t0, Joules(0.0), Joules(0.0), Watts(0.0), duty.interval_max, power.cap().v_now, true});
            power.idle_until(std::min(end, t0 + longest));
            continue;
        }
        const TaskOutcome outcome = power.run_task(task, task_duration, options);
        const Watts charging = power.measure_charging();
        if (outcome.traced.value() > 0.0) {
            TraceRecord total;
            total.aggregate = outcome.traced;
            state = adapt_interval(state, total, charging);
        }
        res.events.push_back({t0, outcome.traced, outcome.true_energy, charging, state.interval, power.cap().v_now, false});
        const SimTime next = t0 + to_sim_time(state.interval);
        power.idle_until(std::min(end, std::max(next, power.now())));
    }
    power.idle_until(end);
    res.voltage = power.voltage_log();
    res.ledger = power.ledger();
    return res;
}

std::vector<DayBin> bin_day(std::span<const DayEvent> events, std::span<const PowerSubsystem::VoltagePoint> voltage,
                            SimTime bin, SimTime span)
{
    if (bin <= SimTime{0}) {
        throw InvalidParameter("bin width must be positive");
    }
    if (span < SimTime{0}) {
        throw InvalidParameter("report span must not be negative");
    }
    std::vector<DayBin> bins;
    for (SimTime a{0}; a < span; a += bin) {
        const SimTime b = std::min(span, a + bin);
        double used = 0.0;
        double charge = 0.0;
        int measured = 0;
        for (const auto& e : events) {
            if (e.t >= a && e.t < b && !e.skipped) {
                used += e.traced.value();
                charge += e.charging.value();
                ++measured;
            }
        }
        DayBin d;
        d.start = a;
        d.end = b;
        const double len = to_seconds(b - a).value();
        d.p_use = Watts(-used / len);
        d.p_charge = Watts(measured > 0 ? std::max(0.0, charge / measured) : 0.0);
        d.v_cap_end = voltage.empty() ? Volts(0.0) : voltage.front().v;
        for (const auto& p : voltage) {
            if (p.t > b) {
                break;
            }
            d.v_cap_end = p.v;
        }
        bins.push_back(d);
    }
    return bins;
}

}  // namespace insitu
