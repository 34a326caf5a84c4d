#include "insitu/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

namespace insitu {

namespace {

using csv::num;

std::string seconds_text(SimTime t) { return num(to_seconds(t).value()); }

BusCostModel bus_model_for(const Scenario& sc)
{
    if (!sc.calibration) {
        return BusCostModel();
    }
    try {
        return BusCostModel(CalibrationTable::load(*sc.calibration));
    } catch (const InvalidParameter& e) {
        throw ScenarioError(sc.source, 0, "bus.calibration", e.what());
    }
}

// Store drained by a plain run, in fixed chunks. Monitor and bus energy are
// spread evenly over the run.
EnergyLedger drain_store(const StoreSpec& store, const RunResult& run, Ohms r_shunt, Joules overhead)
{
    EnergyLedger led;
    SuperCap cap = store.cap;
    led.start = cap.energy();
    led.end = led.start;
    const SimTime chunk = std::chrono::milliseconds(10);
    const SimTime t_end = run.schedule.span_end;
    const double span = to_seconds(t_end - run.schedule.span_start).value();
    for (SimTime a = run.schedule.span_start; a < t_end;) {
        const SimTime b = std::min(t_end, a + chunk);
        const Seconds dt = to_seconds(b - a);
        const double v = run.load.voltage.at(a);
        const Joules node(v * run.load.current.integral(a, b));
        const Joules loss(r_shunt.value() * run.load.current.integral_of_square(a, b));
        const Joules share = overhead * (dt.value() / span);
        const Joules in = store.solar ? store.solar->energy(a, b) * store.charger_efficiency : Joules(0.0);
        const CapStepResult r = cap_step(cap, (in - node - loss - share) / dt, dt);
        cap = r.cap;
        led.in += in;
        led.out += node - r.shortfall;
        led.overhead += loss + share;
        led.shunt_loss += loss;
        led.unharvested += r.unharvested;
        led.shortfall += r.shortfall;
        a = b;
    }
    led.end = cap.energy();
    return led;
}

// Without a store the node hangs off an ideal supply: everything drawn is
// delivered and nothing is stored.
EnergyLedger supply_ledger(Joules node, Joules overhead, Joules loss)
{
    EnergyLedger led;
    led.out = node;
    led.overhead = overhead + loss;
    led.shunt_loss = loss;
    led.in = led.out + led.overhead;
    return led;
}

void add(std::vector<SummaryRow>& rows, std::string quantity, double value)
{
    rows.push_back({std::move(quantity), num(value)});
}

void add_ledger(std::vector<SummaryRow>& rows, const EnergyLedger& l)
{
    add(rows, "ledger.start_J", l.start.value());
    add(rows, "ledger.end_J", l.end.value());
    add(rows, "ledger.in_J", l.in.value());
    add(rows, "ledger.out_J", l.out.value());
    add(rows, "ledger.overhead_J", l.overhead.value());
    add(rows, "ledger.unharvested_J", l.unharvested.value());
    add(rows, "ledger.shortfall_J", l.shortfall.value());
    add(rows, "ledger.residual_rel", l.relative_residual());
}

RunArtifacts execute_plain(const Scenario& sc, std::uint64_t seed)
{
    RunArtifacts art;
    art.seed = seed;
    const BusCostModel model = bus_model_for(sc);
    ShuntMonitor monitor(sc.monitor, sc.r_shunt, sc.noise, seed, sc.monitor_supply);
    BusLink bus(model, sc.bus);
    art.run = run(sc.threads, monitor, bus, sc.duration, sc.run);
    const RunResult& r = *art.run;

    art.report = attribute(r.samples, r.schedule);
    const SimTime period = sc.monitor.sample_period();
    art.traces = collect_traces(r, period, sc.trace_mode);
    if (!r.samples.empty()) {
        art.covered_start = r.samples.front().window_start;
        art.covered_end = r.samples.back().completed;
        for (const auto& s : r.samples) {
            art.covered_start = std::min(art.covered_start, s.window_start);
            art.covered_end = std::max(art.covered_end, s.completed);
        }
    }
    art.shunt_loss = Joules(sc.r_shunt.value() * r.load.current.integral_of_square(SimTime{0}, sc.duration));
    const Joules node(r.load.voltage.at(SimTime{0}) * r.load.current.integral(SimTime{0}, sc.duration));
    const Joules overhead = r.monitor_energy + r.bus_energy;
    art.ledger = sc.store ? drain_store(*sc.store, r, sc.r_shunt, overhead) : supply_ledger(node, overhead, art.shunt_loss);

    if (sc.oracle) {
        ScheduleTrace covered = r.schedule;
        covered.span_start = art.covered_start;
        covered.span_end = art.covered_end;
        art.oracle = oracle_run(r.load, covered);
        double sampled = 0.0;
        for (const auto& s : r.samples) {
            sampled += oracle_energy(r.load, s.window_start, s.completed).value();
        }
        art.oracle_sampled = Joules(sampled);
        art.oracle_run_total = oracle_energy(r.load, SimTime{0}, sc.duration);
    }

    auto& rows = art.summary;
    rows.push_back({"scenario", sc.name});
    rows.push_back({"seed", std::to_string(seed)});
    add(rows, "duration_s", to_seconds(sc.duration).value());
    add(rows, "sample_period_s", to_seconds(period).value());
    add(rows, "samples", static_cast<double>(r.samples.size()));
    add(rows, "context_switches", static_cast<double>(r.schedule.context_switches));
    add(rows, "covered_start_s", to_seconds(art.covered_start).value());
    add(rows, "covered_end_s", to_seconds(art.covered_end).value());
    add(rows, "measured.total_J", art.report.total.value());
    add(rows, "measured.mean_W", art.report.span.value() > 0.0 ? art.report.total.value() / art.report.span.value() : 0.0);
    add(rows, "measured.unattributed_J", art.report.unattributed.value());
    for (const auto& t : art.report.threads) {
        add(rows, "measured.thread." + t.id + "_J", t.energy.value());
    }
    for (const auto& t : art.report.threads) {
        add(rows, "cpu." + t.id, t.cpu_utilization);
    }
    add(rows, "overhead.monitor_J", r.monitor_energy.value());
    add(rows, "overhead.bus_J", r.bus_energy.value());
    add(rows, "overhead.bus_reads", static_cast<double>(r.bus_reads));
    add(rows, "overhead.shunt_loss_J", art.shunt_loss.value());
    add(rows, "overhead.shunt_loss_rel", node.value() > 0.0 ? art.shunt_loss.value() / node.value() : 0.0);
    long starving = 0;
    long overruns = 0;
    for (const auto& d : r.diagnostics) {
        (d.kind == Diagnostic::Kind::starvation ? starving : overruns) += 1;
    }
    add(rows, "diagnostics.starvation", static_cast<double>(starving));
    add(rows, "diagnostics.overrun", static_cast<double>(overruns));
    add_ledger(rows, art.ledger);
    if (art.oracle) {
        add(rows, "oracle.sampled_J", art.oracle_sampled.value());
        add(rows, "oracle.run_total_J", art.oracle_run_total.value());
        const double o = art.oracle_sampled.value();
        add(rows, "delta.total_rel", o != 0.0 ? (art.report.total.value() - o) / o : 0.0);
    }
    return art;
}

RunArtifacts execute_day(const Scenario& sc, std::uint64_t seed)
{
    RunArtifacts art;
    art.seed = seed;
    const DayCycleSpec& d = *sc.day_cycle;
    const BusCostModel model = bus_model_for(sc);
    PowerSubsystem power(d.harvest, sc.noise, seed, model, sc.bus, sc.monitor_supply);
    art.day = run_day_cycle(power, sc.threads, d.task_duration, sc.run, d.duty, sc.duration);
    art.bins = bin_day(art.day->events, art.day->voltage, d.bin, sc.duration);
    art.ledger = art.day->ledger;

    auto& rows = art.summary;
    rows.push_back({"scenario", sc.name});
    rows.push_back({"seed", std::to_string(seed)});
    add(rows, "duration_s", to_seconds(sc.duration).value());
    long tasks = 0;
    long skipped = 0;
    double traced = 0.0;
    double truth = 0.0;
    for (const auto& e : art.day->events) {
        (e.skipped ? skipped : tasks) += 1;
        traced += e.traced.value();
        truth += e.true_energy.value();
    }
    add(rows, "tasks", static_cast<double>(tasks));
    add(rows, "tasks_skipped", static_cast<double>(skipped));
    add(rows, "measured.traced_J", traced);
    add(rows, "truth.task_J", truth);
    add(rows, "overhead.monitor_J", art.ledger.monitor.value());
    add(rows, "overhead.bus_J", art.ledger.bus.value());
    add(rows, "overhead.shunt_loss_J", art.ledger.shunt_loss.value());
    add(rows, "ledger.disabled_J", art.ledger.disabled.value());
    add_ledger(rows, art.ledger);
    return art;
}

csv::Table summary_table(const std::vector<SummaryRow>& rows)
{
    csv::Table t{{"quantity", "value"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.quantity, r.value});
    }
    return t;
}

std::string thread_name(const RunResult& r, int idx)
{
    return idx < 0 ? "idle" : r.schedule.threads[static_cast<std::size_t>(idx)].id;
}

void write_plain(const Scenario& sc, const RunArtifacts& art, const std::filesystem::path& dir)
{
    const RunResult& r = *art.run;
    csv::Table samples{{"t_s", "V_V", "I_A", "P_W", "active_thread"}, {}};
    for (const auto& s : r.samples) {
        samples.rows.push_back({seconds_text(s.completed), num(s.voltage.value()), num(s.current.value()),
                                num(s.power.value()), thread_name(r, s.active_thread)});
    }
    csv::write(dir / "samples.csv", samples);

    csv::Table schedule{{"thread", "start_s", "end_s"}, {}};
    for (const auto& e : r.schedule.entries) {
        schedule.rows.push_back({thread_name(r, e.thread), seconds_text(e.start), seconds_text(e.end)});
    }
    csv::write(dir / "schedule.csv", schedule);

    {
        std::ofstream out(dir / "es_report.txt", std::ios::binary | std::ios::trunc);
        out << format_es_report(art.report);
    }

    csv::Table traces{{"label", "thread", "t_s", "V_V", "I_A", "P_W"}, {}};
    csv::Table trace_summary{{"label", "thread", "start_s", "end_s", "energy_J", "points", "gaps"}, {}};
    for (const auto& t : art.traces) {
        const std::string owner = thread_name(r, t.thread);
        for (const auto& p : t.samples) {
            traces.rows.push_back({t.label, owner, seconds_text(p.t), num(p.voltage.value()), num(p.current.value()),
                                   num(p.power.value())});
        }
        trace_summary.rows.push_back({t.label, owner, seconds_text(t.start), seconds_text(t.end),
                                      num(t.aggregate.value()), std::to_string(t.samples.size()),
                                      std::to_string(t.gaps.size())});
    }
    csv::write(dir / "traces.csv", traces);
    csv::write(dir / "traces_summary.csv", trace_summary);

    if (art.oracle) {
        csv::Table oracle{{"quantity", "value"}, {}};
        oracle.rows.push_back({"total_J", num(art.oracle_sampled.value())});
        oracle.rows.push_back({"idle_J", num(art.oracle->idle.value())});
        for (const auto& t : art.oracle->threads) {
            oracle.rows.push_back({"thread." + t.id + "_J", num(t.energy.value())});
        }
        oracle.rows.push_back({"run_total_J", num(art.oracle_run_total.value())});
        csv::write(dir / "oracle.csv", oracle);
    } else {
        std::filesystem::remove(dir / "oracle.csv");
    }
    (void)sc;
}

void write_day(const RunArtifacts& art, const std::filesystem::path& dir)
{
    const DayCycleResult& d = *art.day;
    csv::Table events{{"t_s", "traced_J", "true_J", "charging_W", "interval_s", "v_cap_V", "skipped"}, {}};
    for (const auto& e : d.events) {
        events.rows.push_back({seconds_text(e.t), num(e.traced.value()), num(e.true_energy.value()),
                               num(e.charging.value()), num(e.interval.value()), num(e.v_cap.value()),
                               e.skipped ? "1" : "0"});
    }
    csv::write(dir / "day_events.csv", events);

    csv::Table voltage{{"t_s", "v_cap_V"}, {}};
    for (const auto& p : d.voltage) {
        voltage.rows.push_back({seconds_text(p.t), num(p.v.value())});
    }
    csv::write(dir / "day_voltage.csv", voltage);

    csv::Table report{{"bin_start", "bin_end", "p_use_W", "p_charge_W", "v_cap_end_V"}, {}};
    for (const auto& b : art.bins) {
        report.rows.push_back({seconds_text(b.start), seconds_text(b.end), num(b.p_use.value()), num(b.p_charge.value()),
                               num(b.v_cap_end.value())});
    }
    csv::write(dir / "day_report.csv", report);
    std::filesystem::remove(dir / "oracle.csv");
}

std::map<std::string, double> read_quantities(const std::filesystem::path& path)
{
    const csv::Table t = csv::read(path);
    const std::size_t q = t.column("quantity");
    const std::size_t v = t.column("value");
    std::map<std::string, double> out;
    for (const auto& row : t.rows) {
        try {
            out[row[q]] = std::stod(row[v]);
        } catch (const std::exception&) {
            // non-numeric rows such as the scenario name
        }
    }
    return out;
}

double median_of(std::vector<double> v) { return percentiles(std::move(v)).p50; }

}  // namespace

RunArtifacts execute(const Scenario& scenario, std::optional<std::uint64_t> seed)
{
    const std::uint64_t s = seed.value_or(scenario.seed);
    return scenario.is_day_cycle() ? execute_day(scenario, s) : execute_plain(scenario, s);
}

void write_artifacts(const Scenario& scenario, const RunArtifacts& artifacts, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    try {
        if (artifacts.day) {
            write_day(artifacts, dir);
        } else {
            write_plain(scenario, artifacts, dir);
        }
        csv::write(dir / "summary.csv", summary_table(artifacts.summary));
    } catch (const std::runtime_error& e) {
        throw RuntimeFailure(e.what());
    }
}

std::vector<CompareRow> compare_oracle(const std::filesystem::path& run_dir)
{
    const auto oracle_path = run_dir / "oracle.csv";
    if (!std::filesystem::exists(oracle_path)) {
        throw RuntimeFailure("missing oracle data: " + oracle_path.string() + " not found");
    }
    std::map<std::string, double> measured;
    std::map<std::string, double> oracle;
    try {
        measured = read_quantities(run_dir / "summary.csv");
        oracle = read_quantities(oracle_path);
    } catch (const std::runtime_error& e) {
        throw RuntimeFailure(e.what());
    }
    std::vector<CompareRow> rows;
    const auto push = [&](const std::string& name, double m, double o) {
        CompareRow r;
        r.quantity = name;
        r.measured = m;
        r.oracle = o;
        r.abs_error = m - o;
        r.rel_error = o != 0.0 ? (m - o) / o : 0.0;
        rows.push_back(r);
    };
    const auto need = [&](const std::map<std::string, double>& from, const std::string& key) {
        const auto it = from.find(key);
        if (it == from.end()) {
            throw RuntimeFailure("missing oracle data: quantity '" + key + "' not found");
        }
        return it->second;
    };
    push("total_J", need(measured, "measured.total_J"), need(oracle, "total_J"));
    push("idle_J", need(measured, "measured.unattributed_J"), need(oracle, "idle_J"));
    for (const auto& [key, value] : oracle) {
        if (key.rfind("thread.", 0) == 0) {
            push(key, need(measured, "measured." + key), value);
        }
    }
    return rows;
}

void write_compare(const std::vector<CompareRow>& rows, const std::filesystem::path& path)
{
    csv::Table t{{"quantity", "measured", "oracle", "abs_error", "rel_error"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.quantity, num(r.measured), num(r.oracle), num(r.abs_error), num(r.rel_error)});
    }
    csv::write(path, t);
}

Percentiles percentiles(std::vector<double> values)
{
    Percentiles p;
    if (values.empty()) {
        return p;
    }
    std::sort(values.begin(), values.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(values.size() - 1, lo + 1);
        return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
    };
    p.p05 = at(0.05);
    p.p25 = at(0.25);
    p.p50 = at(0.50);
    p.p75 = at(0.75);
    p.p95 = at(0.95);
    return p;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidParameter("linear fit needs at least two (x, y) pairs");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) {
        throw InvalidParameter("linear fit needs two distinct x values");
    }
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

Scenario with_constant_current(Scenario scenario, Amperes current)
{
    for (auto& t : scenario.threads) {
        for (auto& a : t.script) {
            if (a.kind == ActivityKind::compute || a.kind == ActivityKind::io) {
                a.current = current;
                a.ramp_to.reset();
            }
        }
    }
    return scenario;
}

SweepResult sweep(const Scenario& scenario, int seeds, const std::vector<double>& currents_ma)
{
    if (seeds < 1) {
        throw InvalidParameter("sweep needs at least one seed");
    }
    if (!scenario.oracle || scenario.is_day_cycle()) {
        throw RuntimeFailure("missing oracle data: sweep needs a scenario with the oracle enabled");
    }
    SweepResult res;
    const auto one = [&](const Scenario& sc, double current_ma) {
        std::vector<double> rel;
        std::vector<double> dev;
        for (int k = 0; k < seeds; ++k) {
            const std::uint64_t seed = sc.seed + static_cast<std::uint64_t>(k);
            const RunArtifacts art = execute(sc, seed);
            SweepRun r;
            r.seed = seed;
            r.current_ma = current_ma;
            r.measured = art.report.total;
            r.oracle = art.oracle_sampled;
            r.rel_error = r.oracle.value() != 0.0 ? (r.measured - r.oracle).value() / r.oracle.value() : 0.0;
            const double window = to_seconds(art.covered_end - art.covered_start).value();
            const double v = sc.supply.value();
            r.deviation = Amperes(window > 0.0 ? std::abs((r.measured - r.oracle).value()) / (v * window) : 0.0);
            rel.push_back(std::abs(r.rel_error));
            dev.push_back(r.deviation.value());
            res.runs.push_back(r);
        }
        return std::pair{median_of(rel), median_of(dev)};
    };
    if (currents_ma.empty()) {
        one(scenario, 0.0);
    } else {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const double ma : currents_ma) {
            if (!(ma > 0.0)) {
                throw InvalidParameter("sweep currents must be positive");
            }
            const auto [rel, dev] = one(with_constant_current(scenario, Amperes(ma * 1e-3)), ma);
            res.currents.push_back({ma, rel, dev});
            xs.push_back(ma * 1e-3);
            ys.push_back(dev);
        }
        if (xs.size() >= 2) {
            res.deviation_fit = linear_fit(xs, ys);
        }
    }
    std::vector<double> all;
    for (const auto& r : res.runs) {
        all.push_back(std::abs(r.rel_error));
    }
    res.abs_rel_error = percentiles(all);
    return res;
}

void write_sweep(const SweepResult& result, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    csv::Table runs{{"seed", "current_mA", "measured_J", "oracle_J", "rel_error", "deviation_A"}, {}};
    for (const auto& r : result.runs) {
        runs.rows.push_back({std::to_string(r.seed), num(r.current_ma), num(r.measured.value()), num(r.oracle.value()),
                             num(r.rel_error), num(r.deviation.value())});
    }
    csv::write(dir / "sweep.csv", runs);

    csv::Table stats{{"statistic", "value"}, {}};
    stats.rows.push_back({"runs", std::to_string(result.runs.size())});
    stats.rows.push_back({"abs_rel_error_p05", num(result.abs_rel_error.p05)});
    stats.rows.push_back({"abs_rel_error_p25", num(result.abs_rel_error.p25)});
    stats.rows.push_back({"abs_rel_error_p50", num(result.abs_rel_error.p50)});
    stats.rows.push_back({"abs_rel_error_p75", num(result.abs_rel_error.p75)});
    stats.rows.push_back({"abs_rel_error_p95", num(result.abs_rel_error.p95)});
    if (result.deviation_fit) {
        stats.rows.push_back({"deviation_fit_slope_A_per_A", num(result.deviation_fit->slope)});
        stats.rows.push_back({"deviation_fit_intercept_A", num(result.deviation_fit->intercept)});
    }
    csv::write(dir / "sweep_summary.csv", stats);

    if (!result.currents.empty()) {
        csv::Table cur{{"current_mA", "median_abs_rel_error", "median_deviation_A"}, {}};
        for (const auto& c : result.currents) {
            cur.rows.push_back({num(c.current_ma), num(c.median_abs_rel_error), num(c.median_deviation_a)});
        }
        csv::write(dir / "sweep_currents.csv", cur);
    }
}

SimTime parse_duration(const std::string& text)
{
    static const std::pair<const char*, double> units[] = {{"ms", 1e-3}, {"us", 1e-6}, {"h", 3600.0}, {"m", 60.0},
                                                           {"s", 1.0}};
    double scale = 1.0;
    std::string number = text;
    for (const auto& [suffix, factor] : units) {
        const std::string sfx = suffix;
        if (text.size() > sfx.size() && text.compare(text.size() - sfx.size(), sfx.size(), sfx) == 0) {
            number = text.substr(0, text.size() - sfx.size());
            scale = factor;
            break;
        }
    }
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(number, &used);
        if (used != number.size()) {
            throw InvalidParameter("");
        }
    } catch (const std::exception&) {
        throw InvalidParameter("cannot read duration '" + text + "'; use e.g. 2h, 30m, 90s, 250ms");
    }
    if (!(value > 0.0)) {
        throw InvalidParameter("duration '" + text + "' must be positive");
    }
    return to_sim_time(Seconds(value * scale));
}

csv::Table rebin(const std::filesystem::path& run_dir, SimTime bin)
{
    if (bin <= SimTime{0}) {
        throw InvalidParameter("bin width must be positive");
    }
    try {
        const auto summary = read_quantities(run_dir / "summary.csv");
        const auto it = summary.find("duration_s");
        if (it == summary.end()) {
            throw RuntimeFailure("summary.csv has no duration_s");
        }
        const SimTime span = to_sim_time(Seconds(it->second));
        const auto t_of = [](const std::string& cell) { return to_sim_time(Seconds(std::stod(cell))); };

        if (std::filesystem::exists(run_dir / "day_events.csv")) {
            const csv::Table ev = csv::read(run_dir / "day_events.csv");
            const csv::Table vt = csv::read(run_dir / "day_voltage.csv");
            std::vector<DayEvent> events;
            for (const auto& row : ev.rows) {
                DayEvent e;
                e.t = t_of(row[ev.column("t_s")]);
                e.traced = Joules(std::stod(row[ev.column("traced_J")]));
                e.charging = Watts(std::stod(row[ev.column("charging_W")]));
                e.skipped = row[ev.column("skipped")] == "1";
                events.push_back(e);
            }
            std::vector<PowerSubsystem::VoltagePoint> volts;
            for (const auto& row : vt.rows) {
                volts.push_back({t_of(row[vt.column("t_s")]), Volts(std::stod(row[vt.column("v_cap_V")]))});
            }
            csv::Table out{{"bin_start", "bin_end", "p_use_W", "p_charge_W", "v_cap_end_V"}, {}};
            for (const auto& b : bin_day(events, volts, bin, span)) {
                out.rows.push_back({seconds_text(b.start), seconds_text(b.end), num(b.p_use.value()),
                                    num(b.p_charge.value()), num(b.v_cap_end.value())});
            }
            return out;
        }

        // Plain run: sampled energy per bin, each sample credited at its
        // completion time.
        const csv::Table s = csv::read(run_dir / "samples.csv");
        const double period = summary.at("sample_period_s");
        std::vector<double> energy;
        for (SimTime a{0}; a < span; a += bin) {
            energy.push_back(0.0);
        }
        for (const auto& row : s.rows) {
            const SimTime t = t_of(row[s.column("t_s")]);
            const std::size_t idx = static_cast<std::size_t>((t - SimTime{1}) / bin);
            if (t > SimTime{0} && idx < energy.size()) {
                energy[idx] += std::stod(row[s.column("P_W")]) * period;
            }
        }
        csv::Table out{{"bin_start", "bin_end", "energy_J", "p_mean_W"}, {}};
        std::size_t k = 0;
        for (SimTime a{0}; a < span; a += bin, ++k) {
            const SimTime b = std::min(span, a + bin);
            out.rows.push_back({seconds_text(a), seconds_text(b), num(energy[k]),
                                num(energy[k] / to_seconds(b - a).value())});
        }
        return out;
    } catch (const RuntimeFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw RuntimeFailure(std::string("cannot rebin run directory: ") + e.what());
    }
}

}  // namespace insitu
