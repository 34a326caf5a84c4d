#pragma once

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>

namespace insitu {

// The eight physical units the library tracks. Mixing them is a compile
// error; only the products and quotients declared below are defined.
enum class Unit { volt, ampere, watt, joule, second, ohm, farad, hertz };

template <Unit U>
class Quantity {
public:
    constexpr Quantity() = default;
    constexpr explicit Quantity(double value) : value_(value) {}

    [[nodiscard]] constexpr double value() const { return value_; }

    constexpr Quantity operator-() const { return Quantity(-value_); }
    constexpr Quantity& operator+=(Quantity o) { value_ += o.value_; return *this; }
    constexpr Quantity& operator-=(Quantity o) { value_ -= o.value_; return *this; }
    constexpr Quantity& operator*=(double k) { value_ *= k; return *this; }
    constexpr Quantity& operator/=(double k) { value_ /= k; return *this; }

    friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity(a.value_ + b.value_); }
    friend constexpr Quantity operator-(Quantity a, Quantity b) { return Quantity(a.value_ - b.value_); }
    friend constexpr Quantity operator*(Quantity a, double k) { return Quantity(a.value_ * k); }
    friend constexpr Quantity operator*(double k, Quantity a) { return Quantity(a.value_ * k); }
    friend constexpr Quantity operator/(Quantity a, double k) { return Quantity(a.value_ / k); }
    friend constexpr double operator/(Quantity a, Quantity b) { return a.value_ / b.value_; }

    friend constexpr auto operator<=>(Quantity, Quantity) = default;

private:
    double value_ = 0.0;
};

using Volts = Quantity<Unit::volt>;
using Amperes = Quantity<Unit::ampere>;
using Watts = Quantity<Unit::watt>;
using Joules = Quantity<Unit::joule>;
using Seconds = Quantity<Unit::second>;
using Ohms = Quantity<Unit::ohm>;
using Farads = Quantity<Unit::farad>;
using Hertz = Quantity<Unit::hertz>;

// Cross-unit relations used by the models.
constexpr Watts operator*(Volts v, Amperes i) { return Watts(v.value() * i.value()); }
constexpr Watts operator*(Amperes i, Volts v) { return Watts(v.value() * i.value()); }
constexpr Volts operator*(Amperes i, Ohms r) { return Volts(i.value() * r.value()); }
constexpr Volts operator*(Ohms r, Amperes i) { return Volts(i.value() * r.value()); }
constexpr Amperes operator/(Volts v, Ohms r) { return Amperes(v.value() / r.value()); }
constexpr Ohms operator/(Volts v, Amperes i) { return Ohms(v.value() / i.value()); }
constexpr Amperes operator/(Watts p, Volts v) { return Amperes(p.value() / v.value()); }
constexpr Joules operator*(Watts p, Seconds t) { return Joules(p.value() * t.value()); }
constexpr Joules operator*(Seconds t, Watts p) { return Joules(p.value() * t.value()); }
constexpr Watts operator/(Joules e, Seconds t) { return Watts(e.value() / t.value()); }
constexpr Seconds operator/(Joules e, Watts p) { return Seconds(e.value() / p.value()); }
constexpr Seconds operator*(Ohms r, Farads c) { return Seconds(r.value() * c.value()); }
constexpr Ohms operator/(Seconds t, Farads c) { return Ohms(t.value() / c.value()); }
constexpr Hertz operator/(double k, Seconds t) { return Hertz(k / t.value()); }
constexpr Seconds operator/(double k, Hertz f) { return Seconds(k / f.value()); }

// Simulation clock. Integer nanoseconds keep event times bit-reproducible.
using SimTime = std::chrono::nanoseconds;

constexpr Seconds to_seconds(SimTime t) { return Seconds(static_cast<double>(t.count()) * 1e-9); }

inline SimTime to_sim_time(Seconds s) { return SimTime(std::llround(s.value() * 1e9)); }

inline namespace literals {

constexpr Volts operator""_V(long double v) { return Volts(static_cast<double>(v)); }
constexpr Volts operator""_V(unsigned long long v) { return Volts(static_cast<double>(v)); }
constexpr Volts operator""_mV(long double v) { return Volts(static_cast<double>(v) * 1e-3); }
constexpr Volts operator""_mV(unsigned long long v) { return Volts(static_cast<double>(v) * 1e-3); }
constexpr Volts operator""_uV(long double v) { return Volts(static_cast<double>(v) * 1e-6); }
constexpr Volts operator""_uV(unsigned long long v) { return Volts(static_cast<double>(v) * 1e-6); }

constexpr Amperes operator""_A(long double v) { return Amperes(static_cast<double>(v)); }
constexpr Amperes operator""_A(unsigned long long v) { return Amperes(static_cast<double>(v)); }
constexpr Amperes operator""_mA(long double v) { return Amperes(static_cast<double>(v) * 1e-3); }
constexpr Amperes operator""_mA(unsigned long long v) { return Amperes(static_cast<double>(v) * 1e-3); }
constexpr Amperes operator""_uA(long double v) { return Amperes(static_cast<double>(v) * 1e-6); }
constexpr Amperes operator""_uA(unsigned long long v) { return Amperes(static_cast<double>(v) * 1e-6); }

constexpr Watts operator""_W(long double v) { return Watts(static_cast<double>(v)); }
constexpr Watts operator""_W(unsigned long long v) { return Watts(static_cast<double>(v)); }
constexpr Watts operator""_mW(long double v) { return Watts(static_cast<double>(v) * 1e-3); }
constexpr Watts operator""_mW(unsigned long long v) { return Watts(static_cast<double>(v) * 1e-3); }
constexpr Watts operator""_uW(long double v) { return Watts(static_cast<double>(v) * 1e-6); }
constexpr Watts operator""_uW(unsigned long long v) { return Watts(static_cast<double>(v) * 1e-6); }

constexpr Joules operator""_J(long double v) { return Joules(static_cast<double>(v)); }
constexpr Joules operator""_J(unsigned long long v) { return Joules(static_cast<double>(v)); }
constexpr Joules operator""_mJ(long double v) { return Joules(static_cast<double>(v) * 1e-3); }
constexpr Joules operator""_mJ(unsigned long long v) { return Joules(static_cast<double>(v) * 1e-3); }
constexpr Joules operator""_uJ(long double v) { return Joules(static_cast<double>(v) * 1e-6); }
constexpr Joules operator""_uJ(unsigned long long v) { return Joules(static_cast<double>(v) * 1e-6); }

constexpr Seconds operator""_s(long double v) { return Seconds(static_cast<double>(v)); }
constexpr Seconds operator""_s(unsigned long long v) { return Seconds(static_cast<double>(v)); }

constexpr Ohms operator""_Ohm(long double v) { return Ohms(static_cast<double>(v)); }
constexpr Ohms operator""_Ohm(unsigned long long v) { return Ohms(static_cast<double>(v)); }
constexpr Ohms operator""_kOhm(long double v) { return Ohms(static_cast<double>(v) * 1e3); }
constexpr Ohms operator""_kOhm(unsigned long long v) { return Ohms(static_cast<double>(v) * 1e3); }

constexpr Farads operator""_F(long double v) { return Farads(static_cast<double>(v)); }
constexpr Farads operator""_F(unsigned long long v) { return Farads(static_cast<double>(v)); }
constexpr Farads operator""_pF(long double v) { return Farads(static_cast<double>(v) * 1e-12); }
constexpr Farads operator""_pF(unsigned long long v) { return Farads(static_cast<double>(v) * 1e-12); }

constexpr Hertz operator""_Hz(long double v) { return Hertz(static_cast<double>(v)); }
constexpr Hertz operator""_Hz(unsigned long long v) { return Hertz(static_cast<double>(v)); }

}  // namespace literals

}  // namespace insitu
