#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "bvi/error.hpp"
#include "bvi/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bregman proximal variational inference experiments"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out,-o", out_dir, "Output directory (overrides output_dir)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled");
  validate->add_option("config", validate_path, "Config file")->required();

  std::string demo_name;
  auto* demo = app.add_subcommand("demo", "Print a canned config");
  demo->add_option("experiment", demo_name, "single_run, gaussian_sweep, sensitivity or regression")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*demo) {
      std::cout << bvi::demo_config(demo_name).dump(2) << "\n";
      return 0;
    }
    if (*validate) {
      const bvi::ExperimentConfig cfg = bvi::load_config(validate_path);
      std::cout << bvi::config_to_json(cfg).dump(2) << "\n";
      return 0;
    }
    bvi::ExperimentConfig cfg = bvi::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const bvi::ExperimentResult res = bvi::run_experiment(cfg, jobs);
    bvi::write_outputs(res, cfg.output_dir);
    int diverged = 0;
    for (const auto& r : res.runs) diverged += r.status == bvi::RunStatus::Diverged;
    std::cerr << "bvi: " << res.runs.size() << " runs (" << diverged << " diverged) in "
              << res.seconds << " s -> " << cfg.output_dir << "\n";
    return 0;
  } catch (const bvi::ConfigError& e) {
    std::cerr << "bvi: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bvi::Error& e) {
    std::cerr << "bvi: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "bvi: I/O error: " << e.what() << "\n";
    return kExitIo;
  }
}
