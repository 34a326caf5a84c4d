#include "insitu/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace insitu {

ScenarioError::ScenarioError(std::string source, int line, std::string field, const std::string& what)
    : InvalidParameter(source + ":" + std::to_string(line) + ": " + field + ": " + what),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field))
{
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

// Checked view of one YAML mapping. Every key read is remembered so that
// finish() can reject typos.
class Section {
public:
    Section(YAML::Node node, std::string path, std::string source)
        : node_(std::move(node)), path_(std::move(path)), source_(std::move(source))
    {
        if (!node_.IsMap()) {
            fail_here("expected a mapping");
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

    template <typename T>
    T get(const std::string& key, T fallback)
    {
        used_.insert(key);
        return has(key) ? required<T>(key) : fallback;
    }

    template <typename T>
    T required(const std::string& key)
    {
        used_.insert(key);
        const YAML::Node n = node_[key];
        if (!n) {
            fail(key, "missing required field");
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ScenarioError(source_, line_of(n), field(key), "cannot read value '" + describe(n) + "'");
        }
    }

    Section section(const std::string& key)
    {
        used_.insert(key);
        if (!has(key)) {
            fail(key, "missing required section");
        }
        return Section(node_[key], field(key), source_);
    }

    YAML::Node raw(const std::string& key)
    {
        used_.insert(key);
        return node_[key];
    }

    void finish() const
    {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (used_.count(key) == 0) {
                throw ScenarioError(source_, line_of(kv.first), field(key), "unknown field");
            }
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        const YAML::Node n = node_[key];
        throw ScenarioError(source_, n ? line_of(n) : line_of(node_), field(key), what);
    }

    [[noreturn]] void fail_here(const std::string& what) const
    {
        throw ScenarioError(source_, line_of(node_), path_.empty() ? "<root>" : path_, what);
    }

    // Same, but blames one key of the section.
    template <typename Fn>
    void validate_field(const std::string& key, Fn&& check) const
    {
        try {
            check();
        } catch (const ScenarioError&) {
            throw;
        } catch (const InvalidParameter& e) {
            fail(key, e.what());
        }
    }

    // Runs `check` and re-raises module validation errors at this section.
    template <typename Fn>
    void validate(Fn&& check) const
    {
        try {
            check();
        } catch (const ScenarioError&) {
            throw;
        } catch (const InvalidParameter& e) {
            fail_here(e.what());
        }
    }

    [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] const std::string& source() const { return source_; }

private:
    static std::string describe(const YAML::Node& n)
    {
        if (n.IsScalar()) return n.Scalar();
        return n.IsMap() ? "<mapping>" : "<sequence>";
    }

    YAML::Node node_;
    std::string path_;
    std::string source_;
    std::set<std::string> used_;
};

SimTime seconds_of(double s) { return to_sim_time(Seconds(s)); }

MonitorMode parse_mode(Section& s, const std::string& key, MonitorMode fallback)
{
    if (!s.has(key)) {
        return fallback;
    }
    const auto text = s.required<std::string>(key);
    if (text == "continuous") return MonitorMode::continuous;
    if (text == "triggered") return MonitorMode::triggered;
    if (text == "power_down") return MonitorMode::power_down;
    s.fail(key, "unknown mode '" + text + "'; allowed: continuous, triggered, power_down");
}

MonitorConfig parse_monitor(Section s, MonitorConfig cfg)
{
    cfg.shunt_conv = Microseconds(s.get<int>("shunt_conv_us", static_cast<int>(cfg.shunt_conv.count())));
    cfg.bus_conv = Microseconds(s.get<int>("bus_conv_us", static_cast<int>(cfg.bus_conv.count())));
    cfg.averaging = s.get<int>("averaging", cfg.averaging);
    cfg.mode = parse_mode(s, "mode", cfg.mode);
    cfg.alert_enabled = s.get<bool>("alert", cfg.alert_enabled);
    s.finish();
    if (!is_valid_conversion_time(cfg.shunt_conv)) {
        s.validate_field("shunt_conv_us", [&] { cfg.validate(); });
    }
    if (!is_valid_conversion_time(cfg.bus_conv)) {
        s.validate_field("bus_conv_us", [&] { cfg.validate(); });
    }
    if (!is_valid_averaging(cfg.averaging)) {
        s.validate_field("averaging", [&] { cfg.validate(); });
    }
    s.validate([&] { cfg.validate(); });
    return cfg;
}

// One script step: exactly one of compute_*/sleep_*/io_* (with a _s, _ms or
// _us suffix), trace_start or trace_stop.
Activity parse_activity(Section s)
{
    static const std::pair<const char*, ActivityKind> kinds[] = {
        {"compute", ActivityKind::compute}, {"sleep", ActivityKind::sleep}, {"io", ActivityKind::io}};
    static const std::pair<const char*, double> units[] = {{"_s", 1.0}, {"_ms", 1e-3}, {"_us", 1e-6}};

    std::optional<Activity> found;
    const auto claim = [&](const std::string& key) {
        if (found) {
            s.fail(key, "a script step takes exactly one action");
        }
    };
    for (const auto& [stem, kind] : kinds) {
        for (const auto& [suffix, scale] : units) {
            const std::string key = std::string(stem) + suffix;
            if (!s.has(key)) {
                continue;
            }
            claim(key);
            const double value = s.required<double>(key);
            if (value < 0.0) {
                s.fail(key, "duration must not be negative");
            }
            Activity a;
            a.kind = kind;
            a.duration = to_sim_time(Seconds(value * scale));
            found = a;
        }
    }
    for (const std::string key : {"trace_start", "trace_stop"}) {
        if (!s.has(key)) {
            continue;
        }
        claim(key);
        const auto label = s.required<std::string>(key);
        found = key == "trace_start" ? Activity::trace_start(label) : Activity::trace_stop(label);
    }
    if (!found) {
        s.fail_here("step needs one of compute_*, sleep_*, io_*, trace_start, trace_stop");
    }
    Activity a = *found;
    if (s.has("ma")) {
        a.current = Amperes(s.required<double>("ma") * 1e-3);
    }
    if (s.has("ramp_to_ma")) {
        if (a.kind == ActivityKind::sleep) {
            s.fail("ramp_to_ma", "only compute and io steps can ramp");
        }
        a.ramp_to = Amperes(s.required<double>("ramp_to_ma") * 1e-3);
    }
    s.finish();
    return a;
}

ThreadSpec parse_thread(Section s)
{
    ThreadSpec t;
    t.id = s.required<std::string>("id");
    t.priority = s.get<int>("priority", t.priority);
    t.repeat = s.get<bool>("repeat", false);
    t.start = seconds_of(s.get<double>("start_s", 0.0));
    const YAML::Node script = s.raw("script");
    if (!script || !script.IsSequence()) {
        s.fail("script", "expected a list of steps");
    }
    for (std::size_t i = 0; i < script.size(); ++i) {
        t.script.push_back(parse_activity(Section(script[i], s.field("script") + "[" + std::to_string(i) + "]", s.source())));
    }
    s.finish();
    return t;
}

SuperCap parse_cap(Section s)
{
    SuperCap c;
    c.capacitance = Farads(s.get<double>("capacitance_f", c.capacitance.value()));
    c.v_max = Volts(s.get<double>("v_max", c.v_max.value()));
    c.v_now = Volts(s.get<double>("v_now", c.v_max.value()));
    c.v_min_operating = Volts(s.get<double>("v_min_operating", c.v_min_operating.value()));
    s.finish();
    s.validate([&] { c.validate(); });
    return c;
}

SolarProfile parse_solar(Section s)
{
    const auto kind = s.required<std::string>("kind");
    SolarProfile p;
    s.validate([&] {
        if (kind == "constant") {
            p = SolarProfile::constant(Watts(s.required<double>("mw") * 1e-3));
        } else if (kind == "diurnal") {
            p = SolarProfile::diurnal(Watts(s.required<double>("peak_mw") * 1e-3),
                                      Seconds(s.get<double>("sunrise_h", 6.0) * 3600.0),
                                      Seconds(s.get<double>("sunset_h", 18.0) * 3600.0));
        } else if (kind == "table") {
            const YAML::Node pts = s.raw("points");
            if (!pts || !pts.IsSequence()) {
                s.fail("points", "expected a list of [t_s, mw] pairs");
            }
            PiecewiseLinear table;
            for (const auto& row : pts) {
                if (!row.IsSequence() || row.size() != 2) {
                    throw ScenarioError(s.source(), line_of(row), s.field("points"), "expected a [t_s, mw] pair");
                }
                try {
                    table.append(seconds_of(row[0].as<double>()), row[1].as<double>() * 1e-3);
                } catch (const YAML::Exception&) {
                    throw ScenarioError(s.source(), line_of(row), s.field("points"), "expected numbers");
                } catch (const ContractViolation& e) {
                    throw ScenarioError(s.source(), line_of(row), s.field("points"), e.what());
                }
            }
            p = SolarProfile::table(std::move(table));
        } else {
            s.fail("kind", "unknown solar kind '" + kind + "'; allowed: constant, diurnal, table");
        }
    });
    s.finish();
    return p;
}

DutyCycleParams parse_duty(Section s)
{
    DutyCycleParams d;
    d.interval_min = Seconds(s.get<double>("interval_min_s", d.interval_min.value()));
    d.interval_max = Seconds(s.get<double>("interval_max_s", d.interval_max.value()));
    d.interval_initial = Seconds(s.get<double>("interval_initial_s", d.interval_initial.value()));
    d.headroom = s.get<double>("headroom", d.headroom);
    d.alpha = s.get<double>("alpha", d.alpha);
    d.epsilon = Watts(s.get<double>("epsilon_uw", d.epsilon.value() * 1e6) * 1e-6);
    s.finish();
    s.validate([&] { d.validate(); });
    return d;
}

}  // namespace

void Scenario::validate() const
{
    const auto fail = [&](const std::string& field, const std::string& what) {
        throw ScenarioError(source, 0, field, what);
    };
    if (duration < SimTime{0}) fail("duration_s", "must not be negative");
    if (!(r_shunt.value() > 0.0)) fail("shunt_ohm", "must be positive");
    if (!(supply.value() > 0.0)) fail("supply_v", "must be positive");
    try {
        monitor.validate();
        noise.validate();
        monitor_supply.validate();
        validate_threads(threads, run.measurement);
        if (store) store->cap.validate();
        if (day_cycle) {
            day_cycle->harvest.validate();
            day_cycle->duty.validate();
        }
    } catch (const InvalidParameter& e) {
        fail("<scenario>", e.what());
    }
    for (const auto& t : threads) {
        if (t.id.find_first_of(",\n\r") != std::string::npos) fail("threads", "thread id '" + t.id + "' must not contain commas or line breaks");
        for (const auto& a : t.script) {
            if (a.label.find_first_of(",\n\r") != std::string::npos) fail("threads", "trace label '" + a.label + "' must not contain commas or line breaks");
        }
    }
    if (day_cycle && day_cycle->task_duration <= SimTime{0}) fail("day_cycle.task_duration_s", "must be positive");
    if (day_cycle && day_cycle->bin <= SimTime{0}) fail("day_cycle.bin_h", "must be positive");
}

Scenario parse_scenario(const std::string& text, const std::string& source)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(source, e.mark.line + 1, "<syntax>", e.msg);
    }
    if (!root || root.IsNull()) {
        throw ScenarioError(source, 1, "<root>", "empty scenario");
    }
    Section s(root, "", source);
    Scenario sc;
    sc.source = source;

    const int version = s.required<int>("format_version");
    if (version != kScenarioFormatVersion) {
        s.fail("format_version", "unsupported version " + std::to_string(version) + "; this build reads " +
                                     std::to_string(kScenarioFormatVersion));
    }
    sc.name = s.get<std::string>("name", "scenario");
    sc.seed = s.get<std::uint64_t>("seed", 0);
    const double duration = s.required<double>("duration_s");
    if (duration < 0.0) {
        s.fail("duration_s", "must not be negative");
    }
    sc.duration = seconds_of(duration);
    sc.supply = Volts(s.get<double>("supply_v", sc.supply.value()));
    if (!(sc.supply.value() > 0.0)) {
        s.fail("supply_v", "must be positive");
    }
    sc.r_shunt = Ohms(s.get<double>("shunt_ohm", sc.r_shunt.value()));
    if (!(sc.r_shunt.value() > 0.0)) {
        s.fail("shunt_ohm", "must be positive");
    }
    sc.oracle = s.get<bool>("oracle", true);

    if (s.has("monitor")) {
        sc.monitor = parse_monitor(s.section("monitor"), sc.monitor);
    }

    if (s.has("noise")) {
        Section n = s.section("noise");
        if (n.get<bool>("ideal", false)) {
            sc.noise = NoiseModel::ideal();
        }
        sc.noise.sigma_shunt = Volts(n.get<double>("sigma_shunt_uv", sc.noise.sigma_shunt.value() * 1e6) * 1e-6);
        sc.noise.gain_error = n.get<double>("gain_error", sc.noise.gain_error);
        n.finish();
        n.validate([&] { sc.noise.validate(); });
    }

    if (s.has("monitor_supply")) {
        Section m = s.section("monitor_supply");
        sc.monitor_supply.active = Watts(m.get<double>("active_mw", sc.monitor_supply.active.value() * 1e3) * 1e-3);
        sc.monitor_supply.sleep_current =
            Amperes(m.get<double>("sleep_ua", sc.monitor_supply.sleep_current.value() * 1e6) * 1e-6);
        sc.monitor_supply.v_supply = Volts(m.get<double>("v_supply", sc.monitor_supply.v_supply.value()));
        m.finish();
        m.validate([&] { sc.monitor_supply.validate(); });
    }

    if (s.has("bus")) {
        Section b = s.section("bus");
        if (b.has("speed")) {
            const auto text = b.required<std::string>("speed");
            const auto speed = parse_speed_mode(text);
            if (!speed) {
                b.fail("speed", "unknown speed mode '" + text + "'; allowed: fast, fast_plus, high");
            }
            sc.bus.speed = *speed;
        }
        sc.bus.pullup = Ohms(b.get<double>("pullup_ohm", sc.bus.pullup.value()));
        sc.bus.c_bus = Farads(b.get<double>("c_bus_pf", sc.bus.c_bus.value() * 1e12) * 1e-12);
        sc.bus.v_dd = Volts(b.get<double>("v_dd", sc.bus.v_dd.value()));
        if (b.has("calibration")) {
            sc.calibration = std::filesystem::path(b.required<std::string>("calibration"));
        }
        if (!(sc.bus.pullup.value() > 0.0) || !(sc.bus.c_bus.value() > 0.0) || !(sc.bus.v_dd.value() > 0.0)) {
            b.fail_here("pullup_ohm, c_bus_pf and v_dd must be positive");
        }
        b.finish();
    }

    sc.run.node.supply = sc.supply;
    if (s.has("node")) {
        Section n = s.section("node");
        sc.run.node.idle_current = Amperes(n.get<double>("idle_ma", 0.0) * 1e-3);
        sc.run.node.cpu_current = Amperes(n.get<double>("cpu_ma", 0.0) * 1e-3);
        if (sc.run.node.idle_current.value() < 0.0 || sc.run.node.cpu_current.value() < 0.0) {
            n.fail_here("currents must not be negative");
        }
        n.finish();
    }

    auto& m = sc.run.measurement;
    if (s.has("measurement")) {
        Section n = s.section("measurement");
        m.id = n.get<std::string>("id", m.id);
        m.priority = n.get<int>("priority", m.priority);
        m.t_proc = to_sim_time(Seconds(n.get<double>("t_proc_us", 160.0) * 1e-6));
        m.current = Amperes(n.get<double>("current_ma", 0.0) * 1e-3);
        m.reads_per_sample = n.get<int>("reads_per_sample", m.reads_per_sample);
        m.starvation_deadline = to_sim_time(Seconds(n.get<double>("starvation_deadline_us", 0.0) * 1e-6));
        n.finish();
    }

    const YAML::Node threads = s.raw("threads");
    if (threads) {
        if (!threads.IsSequence()) {
            s.fail("threads", "expected a list of threads");
        }
        for (std::size_t i = 0; i < threads.size(); ++i) {
            sc.threads.push_back(parse_thread(Section(threads[i], "threads[" + std::to_string(i) + "]", source)));
        }
    }
    {
        const auto mode = s.get<std::string>("trace_mode", "series");
        try {
            sc.trace_mode = parse_trace_mode(mode);
        } catch (const InvalidParameter& e) {
            s.fail("trace_mode", e.what());
        }
    }
    try {
        validate_threads(sc.threads, sc.run.measurement);
    } catch (const InvalidParameter& e) {
        if (threads) {
            throw ScenarioError(source, line_of(threads), "threads", e.what());
        }
        throw ScenarioError(source, 1, "measurement", e.what());
    }

    if (s.has("store")) {
        Section st = s.section("store");
        StoreSpec spec;
        spec.cap = parse_cap(st.section("cap"));
        if (st.has("solar")) {
            spec.solar = parse_solar(st.section("solar"));
        }
        spec.charger_efficiency = st.get<double>("charger_efficiency", 1.0);
        if (!(spec.charger_efficiency > 0.0 && spec.charger_efficiency <= 1.0)) {
            st.fail("charger_efficiency", "must lie in (0, 1]");
        }
        st.finish();
        sc.store = spec;
    }

    if (s.has("day_cycle")) {
        Section d = s.section("day_cycle");
        DayCycleSpec spec;
        HarvestConfig& h = spec.harvest;
        h.cap = parse_cap(d.section("cap"));
        h.solar = parse_solar(d.section("solar"));
        h.charger_efficiency = d.get<double>("charger_efficiency", 1.0);
        h.node_sleep_current = Amperes(d.get<double>("sleep_ua", h.node_sleep_current.value() * 1e6) * 1e-6);
        h.r_shunt = sc.r_shunt;
        if (d.has("charge_window")) {
            MonitorConfig base = h.charge_window;
            h.charge_window = parse_monitor(d.section("charge_window"), base);
        }
        if (d.has("task_sampling")) {
            h.task_sampling = parse_monitor(d.section("task_sampling"), h.task_sampling);
        }
        d.validate([&] { h.validate(); });
        spec.duty = parse_duty(d.section("duty_cycle"));
        const double task = d.required<double>("task_duration_s");
        if (!(task > 0.0)) {
            d.fail("task_duration_s", "must be positive");
        }
        spec.task_duration = seconds_of(task);
        const double bin_h = d.get<double>("bin_h", 2.0);
        if (!(bin_h > 0.0)) {
            d.fail("bin_h", "must be positive");
        }
        spec.bin = seconds_of(bin_h * 3600.0);
        d.finish();
        if (sc.threads.empty()) {
            s.fail("threads", "a day-cycle scenario needs the task script in threads");
        }
        sc.day_cycle = spec;
    }
    if (sc.store && sc.day_cycle) {
        s.fail("store", "use either store or day_cycle, not both");
    }

    s.finish();
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError(path.string(), 0, "<file>", "cannot open scenario file");
    }
    std::ostringstream text;
    text << in.rdbuf();
    Scenario sc = parse_scenario(text.str(), path.string());
    if (sc.calibration && sc.calibration->is_relative()) {
        sc.calibration = path.parent_path() / *sc.calibration;
    }
    return sc;
}

}  // namespace insitu
