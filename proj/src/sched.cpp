#include "insitu/sched.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "insitu/errors.hpp"

namespace insitu {

Activity Activity::compute(SimTime d, Amperes i, std::optional<Amperes> ramp_to)
{
    Activity a;
    a.kind = ActivityKind::compute;
    a.duration = d;
    a.current = i;
    a.ramp_to = ramp_to;
    return a;
}

Activity Activity::sleep(SimTime d)
{
    Activity a;
    a.kind = ActivityKind::sleep;
    a.duration = d;
    return a;
}

Activity Activity::io(SimTime d, Amperes i, std::optional<Amperes> ramp_to)
{
    Activity a;
    a.kind = ActivityKind::io;
    a.duration = d;
    a.current = i;
    a.ramp_to = ramp_to;
    return a;
}

Activity Activity::trace_start(std::string label)
{
    Activity a;
    a.kind = ActivityKind::trace_start;
    a.label = std::move(label);
    return a;
}

Activity Activity::trace_stop(std::string label)
{
    Activity a;
    a.kind = ActivityKind::trace_stop;
    a.label = std::move(label);
    return a;
}

SimTime ScheduleTrace::active_time(int thread) const
{
    SimTime sum{0};
    for (const auto& e : entries) {
        if (e.thread == thread) {
            sum += e.end - e.start;
        }
    }
    return sum;
}

int ScheduleTrace::active_at(SimTime t) const
{
    auto it = std::upper_bound(entries.begin(), entries.end(), t,
                               [](SimTime lhs, const ScheduleEntry& e) { return lhs < e.start; });
    if (it == entries.begin()) {
        return -1;
    }
    --it;
    return t < it->end ? it->thread : -1;
}

int ScheduleTrace::index_of(const std::string& id) const
{
    for (std::size_t i = 0; i < threads.size(); ++i) {
        if (threads[i].id == id) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

double cpu_utilization(Seconds sample_interval, Seconds t_proc)
{
    if (!(sample_interval.value() > 0.0) || !(t_proc.value() > 0.0)) {
        throw InvalidParameter("sample interval and processing time must be positive");
    }
    return std::min(1.0, t_proc / sample_interval);
}

void validate_threads(std::span<const ThreadSpec> threads, const MeasurementThreadConfig& measurement)
{
    std::set<std::string> ids;
    if (measurement.id.empty()) {
        throw InvalidParameter("measurement thread needs an id");
    }
    if (measurement.t_proc <= SimTime{0}) {
        throw InvalidParameter("measurement t_proc must be positive");
    }
    if (measurement.reads_per_sample < 2 || measurement.reads_per_sample > 5) {
        throw InvalidParameter("reads_per_sample must be between 2 and 5");
    }
    ids.insert(measurement.id);
    for (const auto& t : threads) {
        if (t.id.empty()) {
            throw InvalidParameter("thread id must not be empty");
        }
        if (!ids.insert(t.id).second) {
            throw InvalidParameter("duplicate thread id '" + t.id + "'");
        }
        if (t.start < SimTime{0}) {
            throw InvalidParameter("thread '" + t.id + "' has a negative start time");
        }
        SimTime length{0};
        std::set<std::string> open;
        for (const auto& a : t.script) {
            if (a.duration < SimTime{0}) {
                throw InvalidParameter("thread '" + t.id + "' has an activity with negative duration");
            }
            if (a.current.value() < 0.0 || (a.ramp_to && a.ramp_to->value() < 0.0)) {
                throw InvalidParameter("thread '" + t.id + "' has an activity with negative current");
            }
            length += a.duration;
            if (a.kind == ActivityKind::trace_start) {
                if (!open.insert(a.label).second) {
                    throw InvalidParameter("thread '" + t.id + "' starts trace '" + a.label + "' twice");
                }
            } else if (a.kind == ActivityKind::trace_stop) {
                if (open.erase(a.label) == 0) {
                    throw InvalidParameter("thread '" + t.id + "' stops trace '" + a.label + "' without starting it");
                }
            }
        }
        if (t.repeat && length <= SimTime{0}) {
            throw InvalidParameter("repeating thread '" + t.id + "' needs a script with positive duration");
        }
        if (t.repeat && !open.empty()) {
            throw InvalidParameter("repeating thread '" + t.id + "' leaves trace '" + *open.begin() + "' open");
        }
    }
}

namespace {

enum class State { not_started, advancing, ready, blocked, done };

struct Runner {
    const ThreadSpec* spec = nullptr;
    std::size_t idx = 0;
    State state = State::not_started;
    SimTime remaining{0};
    SimTime total{0};
    SimTime wake = SimTime::max();
    double io_from = 0.0;  // peripheral current over the blocked interval
    double io_to = 0.0;
    SimTime io_start{0};
    std::uint64_t seq = 0;

    [[nodiscard]] const Activity& activity() const { return spec->script[idx]; }

    [[nodiscard]] double contribution() const
    {
        const Activity& a = activity();
        if (!a.ramp_to || total <= SimTime{0}) {
            return a.current.value();
        }
        const double frac = static_cast<double>((total - remaining).count()) / static_cast<double>(total.count());
        return a.current.value() + (a.ramp_to->value() - a.current.value()) * frac;
    }

    [[nodiscard]] double io_at(SimTime t) const
    {
        if (state != State::blocked || io_from == io_to) {
            return state == State::blocked ? io_from : 0.0;
        }
        const double frac = static_cast<double>((t - io_start).count()) / static_cast<double>((wake - io_start).count());
        return io_from + (io_to - io_from) * frac;
    }

    [[nodiscard]] double contribution_after(SimTime dt) const
    {
        const Activity& a = activity();
        if (!a.ramp_to || total <= SimTime{0}) {
            return a.current.value();
        }
        const double frac = static_cast<double>((total - remaining + dt).count()) / static_cast<double>(total.count());
        return a.current.value() + (a.ramp_to->value() - a.current.value()) * frac;
    }
};

constexpr std::uint8_t kReadOrder[] = {reg::current, reg::bus_voltage, reg::alert, reg::power, reg::shunt_voltage};

}  // namespace

RunResult run(std::span<const ThreadSpec> threads, ShuntMonitor& monitor, BusLink& bus, SimTime duration,
              const RunOptions& options)
{
    const MeasurementThreadConfig& mcfg = options.measurement;
    const NodeModel& node = options.node;
    validate_threads(threads, mcfg);
    if (duration < SimTime{0}) {
        throw InvalidParameter("run duration must not be negative");
    }

    const SimTime origin = monitor.now();
    const SimTime end = origin + duration;
    const int n = static_cast<int>(threads.size());
    const int meas = n;
    const SimTime deadline = mcfg.starvation_deadline > SimTime{0} ? mcfg.starvation_deadline
                                                                   : monitor.config().sample_period();

    RunResult res;
    res.duration = duration;
    res.schedule.span_start = origin;
    res.schedule.span_end = end;
    for (const auto& t : threads) {
        res.schedule.threads.push_back({t.id, t.priority, 0, false});
    }
    res.schedule.threads.push_back({mcfg.id, mcfg.priority, 0, true});
    res.load.voltage = PiecewiseLinear(node.supply.value());

    const long reads_before = bus.reads();
    const Joules monitor_before = monitor.supply_energy();

    std::vector<Runner> runners(threads.size());
    for (int i = 0; i < n; ++i) {
        runners[i].spec = &threads[i];
    }
    std::uint64_t seq_counter = 0;

    ConversionEvent waiting_ev{};  // alert not yet serviced
    bool waiting = false;
    SimTime waiting_since{0};  // oldest unserviced alert, survives overruns
    bool job_running = false;
    SimTime job_remaining{0};
    std::uint64_t job_seq = 0;

    std::map<std::pair<int, std::string>, SimTime> open_traces;

    const auto settle = [&](int i, SimTime now) {
        Runner& r = runners[i];
        for (;;) {
            switch (r.state) {
            case State::not_started:
                if (origin + r.spec->start > now) {
                    return;
                }
                r.state = State::advancing;
                r.seq = ++seq_counter;
                continue;
            case State::blocked:
                if (r.wake > now) {
                    return;
                }
                r.state = State::advancing;
                r.wake = SimTime::max();
                r.io_from = 0.0;
                r.io_to = 0.0;
                r.seq = ++seq_counter;
                ++r.idx;
                continue;
            case State::ready:
            case State::done: return;
            case State::advancing: break;
            }
            if (r.idx >= r.spec->script.size()) {
                if (r.spec->repeat && !r.spec->script.empty()) {
                    r.idx = 0;
                } else {
                    r.state = State::done;
                    return;
                }
            }
            const Activity& a = r.activity();
            switch (a.kind) {
            case ActivityKind::trace_start:
                open_traces[{i, a.label}] = now;
                ++r.idx;
                continue;
            case ActivityKind::trace_stop: {
                auto it = open_traces.find({i, a.label});
                if (it != open_traces.end()) {
                    res.marks.push_back({a.label, i, it->second, now});
                    open_traces.erase(it);
                }
                ++r.idx;
                continue;
            }
            case ActivityKind::compute:
                if (a.duration <= SimTime{0}) {
                    ++r.idx;
                    continue;
                }
                r.total = a.duration;
                r.remaining = a.duration;
                r.state = State::ready;
                return;
            case ActivityKind::sleep:
            case ActivityKind::io:
                if (a.duration <= SimTime{0}) {
                    ++r.idx;
                    continue;
                }
                r.state = State::blocked;
                r.wake = now + a.duration;
                r.io_start = now;
                r.io_from = a.kind == ActivityKind::io ? a.current.value() : 0.0;
                r.io_to = a.kind == ActivityKind::io && a.ramp_to ? a.ramp_to->value() : r.io_from;
                return;
            }
        }
    };

    const auto service_alerts = [&](SimTime now) {
        for (const auto& ev : monitor.advance(res.load, now)) {
            if (!ev.alert) {
                continue;
            }
            if (waiting) {
                res.diagnostics.push_back({Diagnostic::Kind::overrun, ev.completed, ev.completed - waiting_ev.completed,
                                           "conversion overwritten before the measurement thread read it"});
            } else {
                job_seq = ++seq_counter;
                waiting_since = ev.completed;
            }
            waiting_ev = ev;
            waiting = true;
        }
    };

    SimTime now = origin;
    int previous = -1;
    while (now < end) {
        for (int i = 0; i < n; ++i) {
            settle(i, now);
        }

        int pick = -1;
        int best_prio = std::numeric_limits<int>::max();
        std::uint64_t best_seq = std::numeric_limits<std::uint64_t>::max();
        const auto consider = [&](int idx, int prio, std::uint64_t seq) {
            if (prio < best_prio || (prio == best_prio && seq < best_seq)) {
                pick = idx;
                best_prio = prio;
                best_seq = seq;
            }
        };
        for (int i = 0; i < n; ++i) {
            if (runners[i].state == State::ready) {
                consider(i, runners[i].spec->priority, runners[i].seq);
            }
        }
        if (job_running || waiting) {
            consider(meas, mcfg.priority, job_seq);
        }

        if (pick != previous && pick >= 0) {
            ++res.schedule.threads[pick].context_switches;
            ++res.schedule.context_switches;
        }
        previous = pick;

        if (pick == meas && !job_running) {
            const ConversionEvent ev = waiting_ev;
            waiting = false;
            const SimTime delay = now - waiting_since;
            if (delay > deadline) {
                res.diagnostics.push_back({Diagnostic::Kind::starvation, now, delay,
                                           "measurement thread serviced an alert late"});
            }
            std::uint16_t cur = 0;
            std::uint16_t vbus = 0;
            for (int k = 0; k < mcfg.reads_per_sample; ++k) {
                const auto rd = monitor.read_register(kReadOrder[k], bus);
                if (kReadOrder[k] == reg::current) cur = rd.code;
                if (kReadOrder[k] == reg::bus_voltage) vbus = rd.code;
            }
            Sample s;
            s.window_start = ev.window_start;
            s.completed = ev.completed;
            s.current = monitor.decode_current(cur);
            s.voltage = monitor.decode_bus_voltage(vbus);
            s.power = s.voltage * s.current;
            s.active_thread = res.schedule.active_at(ev.completed - SimTime{1});
            res.samples.push_back(s);
            job_running = true;
            job_remaining = mcfg.t_proc;
        }

        SimTime next = end;
        next = std::min(next, monitor.next_completion());
        for (int i = 0; i < n; ++i) {
            const Runner& r = runners[i];
            if (r.state == State::blocked) {
                next = std::min(next, r.wake);
            } else if (r.state == State::not_started) {
                next = std::min(next, origin + r.spec->start);
            }
        }
        if (pick == meas) {
            next = std::min(next, now + job_remaining);
        } else if (pick >= 0) {
            next = std::min(next, now + runners[pick].remaining);
        }
        const SimTime dt = next - now;

        double i0 = 0.0;
        double i1 = 0.0;
        for (const auto& r : runners) {
            i0 += r.io_at(now);
            i1 += r.io_at(next);
        }
        if (pick < 0) {
            i0 += node.idle_current.value();
            i1 += node.idle_current.value();
        } else if (pick == meas) {
            i0 += node.cpu_current.value() + mcfg.current.value();
            i1 += node.cpu_current.value() + mcfg.current.value();
        } else {
            i0 += node.cpu_current.value() + runners[pick].contribution();
            i1 += node.cpu_current.value() + runners[pick].contribution_after(dt);
        }
        res.load.current.append(now, i0);
        res.load.current.append(next, i1);

        if (pick >= 0 && dt > SimTime{0}) {
            auto& entries = res.schedule.entries;
            if (!entries.empty() && entries.back().thread == pick && entries.back().end == now) {
                entries.back().end = next;
            } else {
                entries.push_back({pick, now, next});
            }
        }

        if (pick == meas) {
            job_remaining -= dt;
            if (job_remaining <= SimTime{0}) {
                job_running = false;
            }
        } else if (pick >= 0) {
            Runner& r = runners[pick];
            r.remaining -= dt;
            if (r.remaining <= SimTime{0}) {
                ++r.idx;
                r.state = State::advancing;
            }
        }
        now = next;
        if (monitor.next_completion() <= now) {
            service_alerts(now);
        }
    }
    service_alerts(end);
    if (waiting && end - waiting_since > deadline) {
        res.diagnostics.push_back({Diagnostic::Kind::starvation, end, end - waiting_since,
                                   "alert still pending at the end of the run"});
    }
    for (const auto& [key, start] : open_traces) {
        res.marks.push_back({key.second, key.first, start, end});
    }
    std::stable_sort(res.marks.begin(), res.marks.end(),
                     [](const TraceMark& a, const TraceMark& b) { return a.start < b.start; });

    res.bus_reads = bus.reads() - reads_before;
    res.bus_energy = bus.per_read().bus_energy * static_cast<double>(res.bus_reads);
    res.monitor_energy = monitor.supply_energy() - monitor_before;
    return res;
}

}  // namespace insitu
