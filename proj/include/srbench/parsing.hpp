#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace srbench {

struct Verdict {
  bool realistic = false;
  std::optional<int> confidence;  // within [0, 10] when present
  std::string reason;
  std::vector<std::string> warnings;  // e.g. out-of-range confidence

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct ParseFailure {
  std::string reason;

  friend bool operator==(const ParseFailure&, const ParseFailure&) = default;
};

struct ProviderFailure {
  std::string reason;

  friend bool operator==(const ProviderFailure&, const ProviderFailure&) = default;
};

using ParseOutcome = std::variant<Verdict, ParseFailure>;

/// Extracts the verdict from a free-text reply.
///
/// Lines are scanned case-insensitively after stripping markdown decoration
/// (asterisks, backticks, underscores, heading and quote markers, list
/// bullets). The first "Realism:" line whose value starts with realistic,
/// unrealistic, yes, no, true or false sets the verdict; a later verdict line
/// with the opposite value makes the reply a ParseFailure. "Confidence:"
/// after the verdict line contributes an integer in [0, 10]; other values are
/// dropped with a warning. "Reason:" captures the rest of its line plus the
/// following lines up to the next Realism/Confidence line.
ParseOutcome parse_response(std::string_view text);

struct ParsedRecord {
  std::string variant_id;
  int repetition_index = 0;
  std::variant<Verdict, ParseFailure, ProviderFailure> result;

  bool valid() const noexcept { return std::holds_alternative<Verdict>(result); }
  bool realistic() const noexcept { return valid() && std::get<Verdict>(result).realistic; }

  friend bool operator==(const ParsedRecord&, const ParsedRecord&) = default;
};

}  // namespace srbench
