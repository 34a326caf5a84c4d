#include "insitu/attribution.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "insitu/errors.hpp"

namespace insitu {

const ThreadEnergy* EnergyReport::find(const std::string& id) const
{
    for (const auto& t : threads) {
        if (t.id == id) {
            return &t;
        }
    }
    return nullptr;
}

Joules EnergyReport::attributed() const
{
    Joules sum{0.0};
    for (const auto& t : threads) {
        sum += t.energy;
    }
    return sum;
}

EnergyReport attribute(std::span<const Sample> samples, const ScheduleTrace& trace)
{
    EnergyReport report;
    report.span = to_seconds(trace.span_end - trace.span_start);
    std::vector<double> energy(trace.threads.size(), 0.0);

    bool overlapping = samples.empty();
    for (const auto& s : samples) {
        if (s.completed > trace.span_start && s.window_start < trace.span_end) {
            overlapping = true;
            break;
        }
    }
    if (!overlapping) {
        throw InvalidParameter("sample windows do not overlap the schedule trace span");
    }

    std::vector<const Sample*> ordered;
    ordered.reserve(samples.size());
    for (const auto& s : samples) {
        ordered.push_back(&s);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Sample* a, const Sample* b) { return a->window_start < b->window_start; });

    double total = 0.0;
    double unattributed = 0.0;
    std::vector<double> share(trace.threads.size(), 0.0);
    std::size_t first = 0;
    const auto& entries = trace.entries;
    for (const Sample* s : ordered) {
        const SimTime a = s->window_start;
        const SimTime b = s->completed;
        if (b <= a) {
            continue;
        }
        const double e = s->energy().value();
        total += e;
        while (first < entries.size() && entries[first].end <= a) {
            ++first;
        }
        std::fill(share.begin(), share.end(), 0.0);
        SimTime busy{0};
        for (std::size_t k = first; k < entries.size() && entries[k].start < b; ++k) {
            const SimTime lo = std::max(a, entries[k].start);
            const SimTime hi = std::min(b, entries[k].end);
            if (hi > lo) {
                share[entries[k].thread] += static_cast<double>((hi - lo).count());
                busy += hi - lo;
            }
        }
        const double window = static_cast<double>((b - a).count());
        for (std::size_t t = 0; t < share.size(); ++t) {
            energy[t] += e * (share[t] / window);
        }
        unattributed += e * (static_cast<double>((b - a - busy).count()) / window);
    }

    report.total = Joules(total);
    report.unattributed = Joules(unattributed);
    for (std::size_t t = 0; t < trace.threads.size(); ++t) {
        ThreadEnergy row;
        row.id = trace.threads[t].id;
        row.priority = trace.threads[t].priority;
        row.context_switches = trace.threads[t].context_switches;
        row.energy = Joules(energy[t]);
        row.active_time = to_seconds(trace.active_time(static_cast<int>(t)));
        row.mean_power = row.active_time.value() > 0.0 ? row.energy / row.active_time : Watts(0.0);
        row.cpu_utilization = report.span.value() > 0.0 ? row.active_time / report.span : 0.0;
        report.threads.push_back(std::move(row));
    }
    return report;
}

std::string format_es_report(const EnergyReport& report)
{
    std::string out = fmt::format("{:<16} {:>4} {:>9} {:>8} {:>14} {:>14}\n", "thread", "prio", "switches", "cpu%",
                                  "energy[J]", "power[W]");
    for (const auto& t : report.threads) {
        out += fmt::format("{:<16} {:>4} {:>9} {:>7.3f}% {:>14.6e} {:>14.6e}\n", t.id, t.priority, t.context_switches,
                           t.cpu_utilization * 100.0, t.energy.value(), t.mean_power.value());
    }
    out += fmt::format("{:<16} {:>4} {:>9} {:>8} {:>14.6e} {:>14}\n", "(idle)", "-", "-", "-", report.unattributed.value(),
                       "-");
    const double mean = report.span.value() > 0.0 ? report.total.value() / report.span.value() : 0.0;
    out += fmt::format("{:<16} {:>4} {:>9} {:>8} {:>14.6e} {:>14.6e}\n", "total", "-", "-", "-", report.total.value(), mean);
    return out;
}

}  // namespace insitu
