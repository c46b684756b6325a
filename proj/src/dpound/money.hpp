#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace dpound {

// All monetary values are unsigned pence. Arithmetic is checked: overflow and
// underflow are reported, never wrapped.
using Pence = std::uint64_t;

inline constexpr Pence kMaxPence = std::numeric_limits<Pence>::max();

inline std::optional<Pence> money_add(Pence a, Pence b) {
    if (a > kMaxPence - b) return std::nullopt;
    return a + b;
}

inline std::optional<Pence> money_sub(Pence a, Pence b) {
    if (b > a) return std::nullopt;
    return a - b;
}

std::string format_pence(Pence value);

} // namespace dpound
