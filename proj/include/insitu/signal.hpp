#pragma once

#include <cstddef>
#include <vector>

#include "insitu/units.hpp"

namespace insitu {

// Piecewise-linear waveform over simulation time. Two breakpoints at the same
// instant form a step; the later one wins at that instant. Outside the
// recorded span the signal holds its first/last value.
class PiecewiseLinear {
public:
    struct Point {
        SimTime t;
        double value;
    };

    PiecewiseLinear() = default;
    explicit PiecewiseLinear(double constant) { points_.push_back({SimTime{0}, constant}); }

    // Breakpoints must be appended in non-decreasing time order.
    void append(SimTime t, double value);

    [[nodiscard]] double at(SimTime t) const;

    // Exact integral of the waveform over [t0, t1] in value-seconds.
    [[nodiscard]] double integral(SimTime t0, SimTime t1) const;

    // Exact integral of the square of the waveform over [t0, t1].
    [[nodiscard]] double integral_of_square(SimTime t0, SimTime t1) const;

    [[nodiscard]] bool empty() const { return points_.empty(); }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] const std::vector<Point>& points() const { return points_; }
    [[nodiscard]] SimTime end_time() const { return points_.empty() ? SimTime{0} : points_.back().t; }

private:
    // Index of the last breakpoint with time <= t, or npos when t precedes all.
    [[nodiscard]] std::size_t locate(SimTime t) const;

    // Calls fn(value_start, value_end, dt_seconds) for each linear piece of
    // the waveform clipped to [t0, t1].
    template <typename PieceFn>
    void visit_pieces(SimTime t0, SimTime t1, PieceFn&& fn) const;

    std::vector<Point> points_;
};

// Ground-truth electrical activity at the measured port: current through the
// shunt and voltage at the bus-voltage input.
struct LoadProfile {
    PiecewiseLinear current;  // A
    PiecewiseLinear voltage;  // V

    [[nodiscard]] Amperes current_at(SimTime t) const { return Amperes(current.at(t)); }
    [[nodiscard]] Volts voltage_at(SimTime t) const { return Volts(voltage.at(t)); }
    [[nodiscard]] Watts power_at(SimTime t) const { return voltage_at(t) * current_at(t); }
};

}  // namespace insitu
