#include "srbench/parsing.hpp"

#include <algorithm>
#include <cctype>

namespace srbench {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Removes emphasis and code markers anywhere, then leading heading/quote
// markers and list bullets.
std::string strip_decoration(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  for (char c : line) {
    if (c != '*' && c != '`' && c != '_') {
      out.push_back(c);
    }
  }
  std::string_view v = trim(out);
  while (!v.empty() && (v.front() == '#' || v.front() == '>' || v.front() == '-' || v.front() == '+')) {
    v.remove_prefix(1);
    v = trim(v);
  }
  return std::string(v);
}

// Returns the value after "<key>:" when the (lowercased, stripped) line
// starts with the key, else nullopt.
std::optional<std::string_view> field_value(std::string_view lowered, std::string_view key) {
  if (lowered.substr(0, key.size()) != key) {
    return std::nullopt;
  }
  std::string_view rest = trim(lowered.substr(key.size()));
  if (rest.empty() || rest.front() != ':') {
    return std::nullopt;
  }
  rest.remove_prefix(1);
  return trim(rest);
}

std::optional<bool> verdict_token(std::string_view value) {
  std::size_t n = 0;
  while (n < value.size() && std::isalpha(static_cast<unsigned char>(value[n]))) {
    ++n;
  }
  const std::string_view word = value.substr(0, n);
  if (word == "realistic" || word == "yes" || word == "true") {
    return true;
  }
  if (word == "unrealistic" || word == "no" || word == "false") {
    return false;
  }
  return std::nullopt;
}

struct Line {
  std::string stripped;  // original case
  std::string lowered;
};

}  // namespace

ParseOutcome parse_response(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    std::string stripped = strip_decoration(raw);
    std::string lowered = lower(stripped);
    lines.push_back({std::move(stripped), std::move(lowered)});
    if (end == std::string_view::npos) {
      break;
    }
    start = end + 1;
  }

  std::optional<bool> verdict;
  std::size_t verdict_line = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto value = field_value(lines[i].lowered, "realism");
    if (!value) {
      continue;
    }
    const auto token = verdict_token(*value);
    if (!token) {
      continue;
    }
    if (!verdict) {
      verdict = token;
      verdict_line = i;
    } else if (*verdict != *token) {
      return ParseFailure{"contradictory verdicts"};
    }
  }
  if (!verdict) {
    return ParseFailure{"no verdict token"};
  }

  Verdict v;
  v.realistic = *verdict;

  for (std::size_t i = verdict_line + 1; i < lines.size(); ++i) {
    const auto value = field_value(lines[i].lowered, "confidence");
    if (!value) {
      continue;
    }
    std::size_t n = 0;
    while (n < value->size() && std::isdigit(static_cast<unsigned char>((*value)[n]))) {
      ++n;
    }
    const bool fractional = n < value->size() && (*value)[n] == '.' && n + 1 < value->size() &&
                            std::isdigit(static_cast<unsigned char>((*value)[n + 1]));
    if (n == 0 || n > 3 || fractional) {
      v.warnings.push_back("unusable confidence '" + std::string(*value) + "'");
    } else {
      const int c = std::stoi(std::string(value->substr(0, n)));
      if (c <= 10) {
        v.confidence = c;
      } else {
        v.warnings.push_back("confidence " + std::to_string(c) + " outside [0, 10]");
      }
    }
    break;
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!field_value(lines[i].lowered, "reason")) {
      continue;
    }
    // Same offset in the original-case line: the key and colon are ASCII.
    const std::string& original = lines[i].stripped;
    std::string reason(trim(std::string_view(original).substr(original.find(':') + 1)));
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (field_value(lines[j].lowered, "realism") || field_value(lines[j].lowered, "confidence")) {
        break;
      }
      reason += "\n" + lines[j].stripped;
    }
    v.reason = std::string(trim(reason));
    break;
  }
  return v;
}

}  // namespace srbench
