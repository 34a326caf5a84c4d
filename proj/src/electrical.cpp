#include "insitu/electrical.hpp"

#include <string>

#include "insitu/errors.hpp"

namespace insitu {

namespace {

void require_positive(double v, const char* what)
{
    if (!(v > 0.0)) {
        throw InvalidParameter(std::string(what) + " must be positive, got " + std::to_string(v));
    }
}

void require_non_negative(double v, const char* what)
{
    if (!(v >= 0.0)) {
        throw InvalidParameter(std::string(what) + " must not be negative, got " + std::to_string(v));
    }
}

}  // namespace

Amperes current_lsb(Ohms r_shunt)
{
    require_positive(r_shunt.value(), "shunt resistance");
    return kShuntVoltageLsb / r_shunt;
}

Ohms max_pullup(Seconds t_rise, Farads c_bus)
{
    require_positive(t_rise.value(), "rise time");
    require_positive(c_bus.value(), "bus capacitance");
    return t_rise / (c_bus * 0.8473);
}

Joules read_energy(Watts p_mcu, Watts p_read, Seconds t_read)
{
    require_non_negative(p_mcu.value(), "MCU power");
    require_non_negative(p_read.value(), "read power");
    require_non_negative(t_read.value(), "read time");
    return (p_mcu + p_read) * t_read;
}

ShuntLoss shunt_loss(Amperes i_load, Ohms r_shunt, Volts v_supply)
{
    require_non_negative(i_load.value(), "load current");
    require_positive(r_shunt.value(), "shunt resistance");
    require_positive(v_supply.value(), "supply voltage");

    ShuntLoss loss;
    loss.absolute = (i_load * r_shunt) * i_load;
    if (i_load.value() > 0.0) {
        loss.relative = loss.absolute / (v_supply * i_load);
    }
    return loss;
}

Amperes full_scale_current(Ohms r_shunt)
{
    return current_lsb(r_shunt) * (kMaxBurdenVoltage / kShuntVoltageLsb);
}

}  // namespace insitu
