#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "srbench/config.hpp"

namespace srbench {

struct WizardResult {
  bool aborted = false;
  RunConfig config;
  std::filesystem::path saved_to;
  /// "run", "ingest", "mutate", "evaluate", "analyze" or "none".
  std::string module = "none";
};

/// Walks the user through every configuration section, pre-filled from
/// `initial`. Empty input keeps the shown default, "-" clears a value and
/// "q" or end of input aborts. Invalid answers are re-prompted. The config
/// file is written only after every section has been answered; an abort
/// leaves the filesystem untouched.
WizardResult interactive_wizard(std::istream& in, std::ostream& out, const RunConfig& initial = RunConfig::defaults(),
                                const std::filesystem::path& default_config_path = "srbench.conf");

}  // namespace srbench
