#include "insitu/signal.hpp"

#include <algorithm>
#include <limits>

#include "insitu/errors.hpp"

namespace insitu {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

double seconds_between(SimTime a, SimTime b) { return static_cast<double>((b - a).count()) * 1e-9; }

}  // namespace

void PiecewiseLinear::append(SimTime t, double value)
{
    if (!points_.empty() && t < points_.back().t) {
        throw ContractViolation("waveform breakpoints must be time-ordered");
    }
    if (!points_.empty() && points_.back().t == t && points_.back().value == value) {
        return;
    }
    // Collapse redundant collinear constant runs to keep long profiles small.
    if (points_.size() >= 2) {
        const Point& a = points_[points_.size() - 2];
        const Point& b = points_.back();
        if (a.value == b.value && b.value == value && a.t < b.t && b.t < t) {
            points_.back().t = t;
            return;
        }
    }
    points_.push_back({t, value});
}

std::size_t PiecewiseLinear::locate(SimTime t) const
{
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](SimTime lhs, const Point& p) { return lhs < p.t; });
    if (it == points_.begin()) {
        return npos;
    }
    return static_cast<std::size_t>(std::distance(points_.begin(), it)) - 1;
}

double PiecewiseLinear::at(SimTime t) const
{
    if (points_.empty()) {
        return 0.0;
    }
    const std::size_t i = locate(t);
    if (i == npos) {
        return points_.front().value;
    }
    if (i + 1 >= points_.size()) {
        return points_.back().value;
    }
    const Point& a = points_[i];
    const Point& b = points_[i + 1];
    if (b.t == a.t) {
        return b.value;
    }
    const double frac = static_cast<double>((t - a.t).count()) / static_cast<double>((b.t - a.t).count());
    return a.value + (b.value - a.value) * frac;
}

template <typename PieceFn>
void PiecewiseLinear::visit_pieces(SimTime t0, SimTime t1, PieceFn&& fn) const
{
    if (t1 <= t0 || points_.empty()) {
        return;
    }
    const Point& first = points_.front();
    const Point& last = points_.back();
    if (t0 < first.t) {
        const SimTime e = std::min(t1, first.t);
        fn(first.value, first.value, seconds_between(t0, e));
    }
    std::size_t k = locate(t0);
    if (k == npos) {
        k = 0;
    }
    for (; k + 1 < points_.size() && points_[k].t < t1; ++k) {
        const Point& a = points_[k];
        const Point& b = points_[k + 1];
        if (b.t <= a.t) {
            continue;
        }
        const SimTime s = std::max(a.t, t0);
        const SimTime e = std::min(b.t, t1);
        if (e <= s) {
            continue;
        }
        const double span = static_cast<double>((b.t - a.t).count());
        const double slope = (b.value - a.value) / span;
        const double va = a.value + slope * static_cast<double>((s - a.t).count());
        const double vb = a.value + slope * static_cast<double>((e - a.t).count());
        fn(va, vb, seconds_between(s, e));
    }
    if (t1 > last.t) {
        const SimTime s = std::max(t0, last.t);
        fn(last.value, last.value, seconds_between(s, t1));
    }
}

double PiecewiseLinear::integral(SimTime t0, SimTime t1) const
{
    double sum = 0.0;
    visit_pieces(t0, t1, [&](double va, double vb, double dt) { sum += 0.5 * (va + vb) * dt; });
    return sum;
}

double PiecewiseLinear::integral_of_square(SimTime t0, SimTime t1) const
{
    double sum = 0.0;
    visit_pieces(t0, t1, [&](double va, double vb, double dt) { sum += (va * va + va * vb + vb * vb) / 3.0 * dt; });
    return sum;
}

}  // namespace insitu
