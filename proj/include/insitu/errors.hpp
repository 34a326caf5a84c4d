#pragma once

#include <stdexcept>
#include <string>

namespace insitu {

// Argument outside the domain of an operation (non-positive resistance,
// unknown register address, empty candidate list, ...).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller broke an ordering or pairing contract (time moving backwards,
// trace_stop without trace_start, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A conversion is already in flight.
class BusyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation not allowed in the monitor's current operating mode.
class ModeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace insitu
