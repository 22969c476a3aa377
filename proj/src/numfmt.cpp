#include "srbench/numfmt.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

namespace srbench {

std::string shortest_repr(double value) {
  if (value == 0.0) {
    value = 0.0;  // drop the sign of -0
  }
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw std::runtime_error("shortest_repr: to_chars failed");
  }
  return std::string(buf.data(), end);
}

std::string fixed_half_away(double value, int decimals) {
  std::array<char, 512> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
  if (ec != std::errc{}) {
    throw std::runtime_error("fixed_half_away: to_chars failed");
  }
  std::string_view text(buf.data(), static_cast<std::size_t>(end - buf.data()));

  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  std::string int_part(text.substr(0, dot));
  std::string frac_part = dot == std::string_view::npos ? std::string{} : std::string(text.substr(dot + 1));

  bool round_up = false;
  if (static_cast<int>(frac_part.size()) > decimals) {
    round_up = frac_part[static_cast<std::size_t>(decimals)] >= '5';
    frac_part.resize(static_cast<std::size_t>(decimals));
  }
  frac_part.append(static_cast<std::size_t>(decimals) - frac_part.size(), '0');

  // Work on the concatenated digit string so carries cross the decimal point.
  std::string digits = int_part + frac_part;
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') {
      digits[static_cast<std::size_t>(i)] = '0';
      --i;
    }
    if (i < 0) {
      digits.insert(digits.begin(), '1');
    } else {
      ++digits[static_cast<std::size_t>(i)];
    }
  }

  const std::size_t int_len = digits.size() - static_cast<std::size_t>(decimals);
  std::string out;
  if (negative && digits.find_first_not_of('0') != std::string::npos) {
    out.push_back('-');
  }
  out.append(digits, 0, int_len);
  if (decimals > 0) {
    out.push_back('.');
    out.append(digits, int_len, std::string::npos);
  }
  return out;
}

}  // namespace srbench
