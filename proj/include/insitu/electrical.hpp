#pragma once

#include "insitu/units.hpp"

namespace insitu {

/// Fixed step size of the shunt-voltage ADC.
inline constexpr Volts kShuntVoltageLsb{2.5e-6};
/// Fixed step size of the bus-voltage ADC.
inline constexpr Volts kBusVoltageLsb{1.25e-3};
/// Maximum differential voltage the shunt channel digitizes.
inline constexpr Volts kMaxBurdenVoltage{81.92e-3};

/// Current resolution for a given shunt: the shunt-voltage LSB divided by the
/// shunt resistance. Throws InvalidParameter for r_shunt <= 0.
Amperes current_lsb(Ohms r_shunt);

/// Largest pull-up that still reaches the bus rise time `t_rise` with bus
/// capacitance `c_bus`. 0.8473 = ln(0.7/0.3), the RC time between the 30%
/// and 70% thresholds.
Ohms max_pullup(Seconds t_rise, Farads c_bus);

/// Energy of one register read: MCU and transaction power over the read time.
Joules read_energy(Watts p_mcu, Watts p_read, Seconds t_read);

struct ShuntLoss {
    Watts absolute;
    double relative = 0.0;  // fraction of the supplied power
};

/// Power dissipated in the shunt and its share of the total supplied power.
ShuntLoss shunt_loss(Amperes i_load, Ohms r_shunt, Volts v_supply);

/// Largest current the shunt channel can represent for `r_shunt`.
Amperes full_scale_current(Ohms r_shunt);

}  // namespace insitu
