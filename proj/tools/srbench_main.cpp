#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "srbench/config.hpp"
#include "srbench/errors.hpp"
#include "srbench/pipeline.hpp"
#include "srbench/reporting.hpp"
#include "srbench/sample.hpp"
#include "srbench/wizard.hpp"

namespace fs = std::filesystem;

namespace {

struct RunFlags {
  std::string config;
  std::string output;
  std::string mock;
  std::string chart_format;
  bool force = false;
  bool no_charts = false;
  bool dry_run = false;
  int max_in_flight = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_dry_run) {
  cmd->add_option("--config", f.config, "Configuration file (defaults apply when omitted)");
  cmd->add_option("--output", f.output, "Output directory, overrides output_dir");
  cmd->add_option("--mock", f.mock,
                  "Offline provider: realistic[:C] | unrealistic[:C] | bernoulli:P[:SEED] | scripted:PATH | "
                  "failing:F[:SEED]");
  cmd->add_flag("--force", f.force, "Overwrite results of an earlier run");
  cmd->add_flag("--no-charts", f.no_charts, "Skip SVG charts");
  cmd->add_option("--max-in-flight", f.max_in_flight, "Concurrent provider calls")->check(CLI::PositiveNumber);
  cmd->add_option("--chart-format", f.chart_format, "Chart format (svg)");
  if (with_dry_run) {
    cmd->add_flag("--dry-run", f.dry_run, "Validate configuration and credentials, write manifest.json only");
  }
}

srbench::RunConfig resolve_config(const RunFlags& f) {
  srbench::RunConfig cfg = f.config.empty() ? srbench::RunConfig::defaults() : srbench::load_config(f.config);
  if (!f.output.empty()) {
    cfg.output_dir = f.output;
  }
  if (!f.mock.empty()) {
    cfg.mock = srbench::MockSpec::parse(f.mock);
  }
  if (f.force) {
    cfg.force_overwrite = true;
  }
  if (f.no_charts) {
    cfg.charts = false;
  }
  if (f.max_in_flight > 0) {
    cfg.llm.max_in_flight = f.max_in_flight;
  }
  if (!f.chart_format.empty()) {
    cfg.chart_format = f.chart_format;
  }
  return cfg;
}

// Progress and the summary line already went to the log stream.
int report(const srbench::PipelineResult& r) { return r.status; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario realism benchmark: mutate driving scenarios, ask an LLM whether they are realistic, "
               "and score how stable the verdicts are."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(srbench::kToolVersion));

  RunFlags flags;
  CLI::App* run = app.add_subcommand("run", "Run ingest, mutate, evaluate and analyze in one go");
  add_run_flags(run, flags, true);

  const char* stages[] = {"ingest", "mutate", "evaluate", "analyze"};
  const char* stage_help[] = {"Load the dataset and keep the first scenario_number scenarios",
                              "Write the original and mutated variants of every scenario",
                              "Send every variant prompt to the provider repetitions times",
                              "Parse responses, compute RS/RSR and write reports"};
  std::vector<CLI::App*> stage_cmds;
  for (std::size_t i = 0; i < 4; ++i) {
    stage_cmds.push_back(app.add_subcommand(stages[i], stage_help[i]));
    add_run_flags(stage_cmds.back(), flags, false);
  }

  std::string wizard_from;
  std::string wizard_save = "srbench.conf";
  CLI::App* interactive = app.add_subcommand("interactive", "Build a configuration step by step, then run it");
  interactive->add_option("--config", wizard_from, "Start from this configuration instead of the defaults");
  interactive->add_option("--save", wizard_save, "Default path offered for the written configuration");

  std::string sample_out = "data/sample";
  int sample_count = 8;
  std::uint64_t sample_seed = 42;
  CLI::App* sample = app.add_subcommand("generate-sample", "Write the deterministic synthetic sample dataset");
  sample->add_option("--out", sample_out, "Target directory");
  sample->add_option("--count", sample_count, "Number of scenarios")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  srbench::PipelineOptions options;
  options.log = &std::cerr;

  try {
    if (sample->parsed()) {
      const auto files = srbench::generate_sample_dataset(sample_out, sample_count, sample_seed);
      std::cout << "wrote " << files.size() << " scenarios to " << sample_out << '\n';
      return srbench::kExitOk;
    }

    if (interactive->parsed()) {
      const srbench::RunConfig initial =
          wizard_from.empty() ? srbench::RunConfig::defaults() : srbench::load_config(wizard_from);
      const srbench::WizardResult w = srbench::interactive_wizard(std::cin, std::cout, initial, wizard_save);
      if (w.aborted || w.module == "none") {
        return srbench::kExitOk;
      }
      if (w.module == "run") {
        return report(srbench::run_pipeline(w.config, options));
      }
      return report(srbench::run_stage(w.module, w.config, options));
    }

    srbench::RunConfig cfg;
    try {
      cfg = resolve_config(flags);
    } catch (const srbench::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return srbench::kExitConfig;
    }

    if (run->parsed()) {
      options.dry_run = flags.dry_run;
      return report(srbench::run_pipeline(cfg, options));
    }
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed()) {
        return report(srbench::run_stage(stages[i], cfg, options));
      }
    }
  } catch (const srbench::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return srbench::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return srbench::kExitAnalysis;
  }
  return srbench::kExitOk;
}
