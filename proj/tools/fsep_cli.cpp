#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "fsep/config.hpp"
#include "fsep/dataset_io.hpp"
#include "fsep/runtime.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2, kInvariantViolation = 3 };

int generate(const std::string& scenario, int cells, int steps, const std::string& out) {
  const auto kind = fsep::parse_scenario_kind(scenario);
  const auto spec = fsep::default_scenario(kind, cells, steps);
  spec.validate();
  const auto dataset = fsep::generate_scenario(spec);
  const auto manifest = fsep::save_dataset(dataset, out);
  std::cout << "wrote " << dataset.steps.size() << " steps to " << manifest.string() << '\n';
  return kOk;
}

int run(const std::string& config_path) {
  const fsep::PipelineConfig config = fsep::load_config(config_path);
  const fsep::RunResult result = fsep::run_pipeline(config);
  const auto& r = result.report;
  std::cout << "seeds " << r.seeds << ", features " << r.initial_features << " -> "
            << r.final_features << ", splits " << result.splits.size() << ", meshes "
            << result.meshes.size() << ", max epsilon " << r.epsilon_max << '\n'
            << "artifacts in " << config.output.string() << '\n';
  for (const auto& v : r.violations) std::cerr << "invariant violation: " << v << '\n';
  return r.violations.empty() ? kOk : kInvariantViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volumetric feature separation for time-dependent multiphase flow data"};
  app.require_subcommand(1);

  std::string scenario, out;
  int cells = 64, steps = 20;
  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset");
  gen->add_option("--scenario", scenario,
                  "split-sphere, rigid-rotation, merge-then-split or shear-stretch")
      ->required();
  gen->add_option("--cells", cells, "Cells per axis")->check(CLI::PositiveNumber);
  gen->add_option("--steps", steps, "Number of stored time steps")->check(CLI::Range(2, 1 << 20));
  gen->add_option("--out", out, "Output directory")->required();

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run the pipeline and export all artifacts");
  run_cmd->add_option("--config", config_path, "Config file of key = value lines")->required();

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Print the report of a finished run");
  report->add_option("--run", run_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return generate(scenario, cells, steps, out);
    if (*run_cmd) return run(config_path);
    if (*report) {
      if (!std::filesystem::exists(std::filesystem::path(run_dir) / "report.tsv")) {
        std::cerr << "data error: no report.tsv in " << run_dir << '\n';
        return kDataError;
      }
      fsep::summarize_run(run_dir, std::cout);
      return kOk;
    }
  } catch (const fsep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fsep::DatasetError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInvariantViolation;
  }
  return kOk;
}
