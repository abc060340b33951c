#pragma once

#include <cstdint>
#include <string>

namespace micl {

// Shortest round-trip decimal form via std::to_chars; stable across runs,
// unlike ostream formatting which depends on stream state.
std::string format_double(double v);

// Fixed-point with the given number of decimals, e.g. format_fixed(1.25, 1)
// -> "1.2" (ties resolve to even through the exact binary value).
std::string format_fixed(double v, int decimals);

std::string to_hex(std::uint64_t value);

std::string iso8601_utc_now();

}  // namespace micl
