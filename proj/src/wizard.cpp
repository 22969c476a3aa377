#include "srbench/wizard.hpp"

#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "srbench/errors.hpp"

namespace srbench {

namespace {

struct Field {
  std::string key;
  std::string raw;  // value text as it appears in the config file
  std::string hint;
};

struct Section {
  std::string title;
  std::vector<Field> fields;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits format_config output into its commented blocks.
std::vector<Section> sections_of(const RunConfig& cfg) {
  std::vector<Section> out;
  std::istringstream in(format_config(cfg));
  std::string line;
  bool new_block = true;
  std::string pending_hint;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) {
      new_block = true;
      continue;
    }
    if (line.front() == '#') {
      const std::string text = trim(line.substr(1));
      if (new_block) {
        out.push_back({text, {}});
        new_block = false;
      } else {
        pending_hint = text;
      }
      continue;
    }
    new_block = false;
    const auto eq = line.find('=');
    if (out.empty() || eq == std::string::npos) {
      continue;
    }
    out.back().fields.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), pending_hint});
    pending_hint.clear();
  }
  std::erase_if(out, [](const Section& s) { return s.fields.empty(); });
  return out;
}

std::string display(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    if (c != '"') {
      out += c;
    }
  }
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
    }
    out += c;
  }
  return out + "\"";
}

// Turns typed input into config value text of the same shape as `raw`.
std::string encode(const Field& f, const std::string& input) {
  if (input == "-") {
    return "\"\"";
  }
  const bool single_string = !f.raw.empty() && f.raw.front() == '"' && f.key != "parameters";
  return single_string ? quote(input) : input;
}

std::string config_text(const std::vector<Section>& sections) {
  std::string text;
  for (const Section& s : sections) {
    for (const Field& f : s.fields) {
      text += f.key + " = " + f.raw + "\n";
    }
  }
  return text;
}

enum class Read { value, abort };

Read read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) {
    return Read::abort;
  }
  line = trim(line);
  return line == "q" ? Read::abort : Read::value;
}

}  // namespace

WizardResult interactive_wizard(std::istream& in, std::ostream& out, const RunConfig& initial,
                                const std::filesystem::path& default_config_path) {
  WizardResult result;
  result.config = initial;
  std::vector<Section> sections = sections_of(initial);

  auto aborted = [&] {
    out << "\naborted, nothing written\n";
    result.aborted = true;
    return result;
  };

  out << "Scenario realism benchmark setup. Press Enter to keep a default, '-' to clear, 'q' to quit.\n\n";
  for (std::size_t i = 0; i < sections.size(); ++i) {
    out << "  " << i + 1 << ". " << sections[i].title << '\n';
  }

  std::set<std::size_t> selected;
  while (true) {
    out << "Sections to edit (numbers separated by commas, 'all' or 'none') [all]: " << std::flush;
    std::string line;
    if (read_line(in, line) == Read::abort) {
      return aborted();
    }
    selected.clear();
    if (line.empty() || line == "all") {
      for (std::size_t i = 0; i < sections.size(); ++i) {
        selected.insert(i);
      }
      break;
    }
    if (line == "none") {
      break;
    }
    bool ok = true;
    std::istringstream items(line);
    std::string item;
    while (std::getline(items, item, ',')) {
      item = trim(item);
      try {
        std::size_t used = 0;
        const int n = std::stoi(item, &used);
        if (used != item.size() || n < 1 || n > static_cast<int>(sections.size())) {
          ok = false;
        } else {
          selected.insert(static_cast<std::size_t>(n - 1));
        }
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (ok) {
      break;
    }
    out << "  invalid selection '" << line << "'\n";
  }

  for (std::size_t si = 0; si < sections.size(); ++si) {
    if (!selected.contains(si)) {
      continue;
    }
    Section& section = sections[si];
    out << "\n[" << si + 1 << "/" << sections.size() << "] " << section.title << '\n';
    for (Field& field : section.fields) {
      if (!field.hint.empty()) {
        out << "  (" << field.hint << ")\n";
      }
      while (true) {
        out << "  " << field.key << " [" << display(field.raw) << "]: " << std::flush;
        std::string line;
        if (read_line(in, line) == Read::abort) {
          return aborted();
        }
        if (line.empty()) {
          break;
        }
        const std::string previous = field.raw;
        field.raw = encode(field, line);
        try {
          parse_config(config_text(sections)).validate();
          break;
        } catch (const Error& e) {
          field.raw = previous;
          out << "  invalid value: " << e.what() << '\n';
        }
      }
    }
  }

  try {
    result.config = parse_config(config_text(sections));
    result.config.validate();
  } catch (const Error& e) {
    // Only reachable when `initial` itself was invalid.
    out << "configuration invalid: " << e.what() << '\n';
    return aborted();
  }

  std::filesystem::path target = default_config_path;
  out << "\nSave configuration to [" << target.string() << "]: " << std::flush;
  std::string line;
  if (read_line(in, line) == Read::abort) {
    return aborted();
  }
  if (!line.empty()) {
    target = line;
  }

  static const std::set<std::string> modules = {"run", "ingest", "mutate", "evaluate", "analyze", "none"};
  std::string module = "run";
  while (true) {
    out << "Module to run now (run, ingest, mutate, evaluate, analyze, none) [run]: " << std::flush;
    if (read_line(in, line) == Read::abort) {
      return aborted();
    }
    if (line.empty() || modules.contains(line)) {
      if (!line.empty()) {
        module = line;
      }
      break;
    }
    out << "  unknown module '" << line << "'\n";
  }

  save_config(result.config, target);
  out << "wrote " << target.string() << '\n';
  result.saved_to = target;
  result.module = module;
  return result;
}

}  // namespace srbench
