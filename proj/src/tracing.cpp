#include "insitu/tracing.hpp"

#include <algorithm>

#include "insitu/errors.hpp"

namespace insitu {

namespace {

TracePoint point_of(const Sample& s)
{
    return {s.center(), s.voltage, s.current, s.power};
}

TracePoint lerp(const TracePoint& a, const TracePoint& b, SimTime t)
{
    const double f = static_cast<double>((t - a.t).count()) / static_cast<double>((b.t - a.t).count());
    return {t, a.voltage + (b.voltage - a.voltage) * f, a.current + (b.current - a.current) * f,
            a.power + (b.power - a.power) * f};
}

}  // namespace

std::string_view to_string(TraceMode mode)
{
    return mode == TraceMode::series ? "series" : "aggregate";
}

TraceMode parse_trace_mode(std::string_view text)
{
    if (text == "series") return TraceMode::series;
    if (text == "aggregate") return TraceMode::aggregate;
    throw InvalidParameter("unknown trace mode '" + std::string(text) + "'; allowed: series, aggregate");
}

Joules integrate(std::span<const TracePoint> points, std::span<const TraceGap> gaps)
{
    double sum = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        const TracePoint& a = points[k - 1];
        const TracePoint& b = points[k];
        const bool in_gap = std::any_of(gaps.begin(), gaps.end(),
                                        [&](const TraceGap& g) { return g.from == a.t && g.to == b.t; });
        if (in_gap) {
            continue;
        }
        sum += 0.5 * (a.power.value() + b.power.value()) * to_seconds(b.t - a.t).value();
    }
    return Joules(sum);
}

TraceRecord make_trace(std::string label, SimTime start, SimTime stop, std::span<const Sample> samples,
                       SimTime sample_period, TraceMode mode)
{
    if (stop < start) {
        throw ContractViolation("trace '" + label + "' stops before it starts");
    }
    TraceRecord rec;
    rec.label = std::move(label);
    rec.start = start;
    rec.end = stop;
    rec.mode = mode;
    if (stop == start || samples.empty()) {
        return rec;
    }

    std::vector<TracePoint> all;
    all.reserve(samples.size());
    for (const auto& s : samples) {
        all.push_back(point_of(s));
    }
    std::stable_sort(all.begin(), all.end(), [](const TracePoint& a, const TracePoint& b) { return a.t < b.t; });

    const SimTime max_spacing = sample_period + sample_period / 2;
    const auto value_at = [&](SimTime t) {
        auto hi = std::lower_bound(all.begin(), all.end(), t, [](const TracePoint& p, SimTime x) { return p.t < x; });
        if (hi == all.end()) {
            TracePoint p = all.back();
            p.t = t;
            return p;
        }
        if (hi->t == t || hi == all.begin()) {
            TracePoint p = *hi;
            p.t = t;
            return p;
        }
        const TracePoint& lo = *(hi - 1);
        if (hi->t - lo.t > max_spacing) {
            // Across a gap: hold the nearer sample instead of interpolating.
            TracePoint p = (t - lo.t <= hi->t - t) ? lo : *hi;
            p.t = t;
            return p;
        }
        return lerp(lo, *hi, t);
    };

    std::vector<TracePoint> series;
    series.push_back(value_at(start));
    for (const auto& p : all) {
        if (p.t > start && p.t < stop) {
            series.push_back(p);
        }
    }
    series.push_back(value_at(stop));

    for (std::size_t k = 1; k < series.size(); ++k) {
        if (series[k].t - series[k - 1].t > max_spacing) {
            rec.gaps.push_back({series[k - 1].t, series[k].t});
        }
    }
    rec.aggregate = integrate(series, rec.gaps);
    if (mode == TraceMode::series) {
        rec.samples = std::move(series);
    }
    return rec;
}

TraceRecorder::TraceRecorder(SimTime sample_period, TraceMode mode) : period_(sample_period), mode_(mode)
{
    if (sample_period <= SimTime{0}) {
        throw InvalidParameter("trace sample period must be positive");
    }
}

void TraceRecorder::start(const std::string& label, SimTime at)
{
    if (!open_.emplace(label, at).second) {
        throw ContractViolation("trace '" + label + "' is already running");
    }
}

TraceRecord TraceRecorder::stop(const std::string& label, SimTime at, std::span<const Sample> samples)
{
    const auto it = open_.find(label);
    if (it == open_.end()) {
        throw ContractViolation("trace '" + label + "' stopped without being started");
    }
    const SimTime start = it->second;
    if (at < start) {
        throw ContractViolation("trace '" + label + "' stops before it starts");
    }
    open_.erase(it);
    return make_trace(label, start, at, samples, period_, mode_);
}

std::vector<TraceRecord> collect_traces(const RunResult& run, SimTime sample_period, TraceMode mode)
{
    std::vector<TraceRecord> out;
    out.reserve(run.marks.size());
    for (const auto& m : run.marks) {
        TraceRecord rec = make_trace(m.label, m.start, m.stop, run.samples, sample_period, mode);
        rec.thread = m.thread;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace insitu
