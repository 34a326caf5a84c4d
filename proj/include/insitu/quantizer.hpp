#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "insitu/errors.hpp"
#include "insitu/units.hpp"

namespace insitu {

// Uniform mid-tread quantizer. Codes span [-full_scale_codes, full_scale_codes]
// when signed and [0, full_scale_codes] otherwise.
template <Unit U>
struct QuantizerSpec {
    Quantity<U> lsb;
    std::int32_t full_scale_codes = 0;
    bool is_signed = true;

    QuantizerSpec(Quantity<U> lsb_, std::int32_t full_scale, bool signed_)
        : lsb(lsb_), full_scale_codes(full_scale), is_signed(signed_)
    {
        if (!(lsb.value() > 0.0)) {
            throw InvalidParameter("quantizer lsb must be positive");
        }
        if (full_scale_codes <= 0) {
            throw InvalidParameter("quantizer full scale must be positive");
        }
    }

    [[nodiscard]] std::int32_t min_code() const { return is_signed ? -full_scale_codes : 0; }
    [[nodiscard]] Quantity<U> full_scale() const { return lsb * full_scale_codes; }
};

struct QuantizedCode {
    std::int32_t code = 0;
    bool saturated = false;
};

// Rounds half away from zero and saturates at the code range.
template <Unit U>
QuantizedCode quantize(Quantity<U> x, const QuantizerSpec<U>& spec)
{
    const double scaled = std::round(x / spec.lsb);
    const auto lo = static_cast<double>(spec.min_code());
    const auto hi = static_cast<double>(spec.full_scale_codes);
    if (std::isnan(scaled)) {
        return {0, true};
    }
    if (scaled > hi) {
        return {spec.full_scale_codes, true};
    }
    if (scaled < lo) {
        return {spec.min_code(), true};
    }
    return {static_cast<std::int32_t>(scaled), false};
}

template <Unit U>
Quantity<U> dequantize(std::int32_t code, const QuantizerSpec<U>& spec)
{
    return spec.lsb * static_cast<double>(code);
}

}  // namespace insitu
