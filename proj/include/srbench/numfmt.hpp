#pragma once

#include <string>

namespace srbench {

/// Shortest decimal text that parses back to exactly `value`
/// ("0.1", "10", "-2.5"). `value` must be finite.
std::string shortest_repr(double value);

/// `value` rounded half away from zero to `decimals` places, always printed
/// with exactly that many fractional digits. Rounding operates on the
/// shortest round-trip decimal form, so results are platform independent.
/// A result that rounds to zero is printed without a minus sign.
std::string fixed_half_away(double value, int decimals);

}  // namespace srbench
