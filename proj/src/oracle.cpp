#include "insitu/oracle.hpp"

#include <algorithm>

#include "insitu/errors.hpp"

namespace insitu {

namespace {

void check(SimTime t0, SimTime t1, SimTime step)
{
    if (step <= SimTime{0}) {
        throw InvalidParameter("oracle step must be positive");
    }
    if (t1 < t0) {
        throw InvalidParameter("oracle interval ends before it starts");
    }
}

// Calls fn(t_mid, energy) for every step of [t0, t1].
template <typename Fn>
void sweep(const LoadProfile& load, SimTime t0, SimTime t1, SimTime step, Fn&& fn)
{
    double p_prev = load.power_at(t0).value();
    for (SimTime a = t0; a < t1;) {
        const SimTime b = std::min(t1, a + step);
        const double p = load.power_at(b).value();
        fn(a + (b - a) / 2, 0.5 * (p_prev + p) * to_seconds(b - a).value());
        p_prev = p;
        a = b;
    }
}

}  // namespace

Joules OracleResult::thread_energy(const std::string& id) const
{
    for (const auto& t : threads) {
        if (t.id == id) {
            return t.energy;
        }
    }
    throw InvalidParameter("oracle has no thread '" + id + "'");
}

Joules oracle_energy(const LoadProfile& load, SimTime t0, SimTime t1, SimTime step)
{
    check(t0, t1, step);
    double sum = 0.0;
    sweep(load, t0, t1, step, [&](SimTime, double e) { sum += e; });
    return Joules(sum);
}

OracleResult oracle_run(const LoadProfile& load, const ScheduleTrace& schedule, SimTime step)
{
    check(schedule.span_start, schedule.span_end, step);
    OracleResult res;
    res.step = step;
    std::vector<double> per(schedule.threads.size(), 0.0);
    double idle = 0.0;
    double total = 0.0;
    std::size_t k = 0;
    const auto& entries = schedule.entries;
    sweep(load, schedule.span_start, schedule.span_end, step, [&](SimTime mid, double e) {
        total += e;
        while (k < entries.size() && entries[k].end <= mid) {
            ++k;
        }
        if (k < entries.size() && entries[k].start <= mid) {
            per[entries[k].thread] += e;
        } else {
            idle += e;
        }
    });
    res.total = Joules(total);
    res.idle = Joules(idle);
    for (std::size_t i = 0; i < schedule.threads.size(); ++i) {
        res.threads.push_back({schedule.threads[i].id, Joules(per[i])});
    }
    return res;
}

}  // namespace insitu
