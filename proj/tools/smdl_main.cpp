#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smdl/core/error.hpp"
#include "smdl/harness/commands.hpp"
#include "smdl/harness/config.hpp"

namespace {

constexpr int kValidationFailure = 1;
constexpr int kNumericalFailure = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular MDL laboratory: LLC estimation, volume scaling, two-part codes and compression sweeps"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<double> epsilons;

  for (const auto& name : smdl::harness::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--epsilon", epsilons, "Override the loss tolerances (comma separated)")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationFailure;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    smdl::harness::Overrides ov;
    ov.seed = seed;
    ov.output_dir = out_dir;
    if (!epsilons.empty()) ov.epsilons = epsilons;
    const auto cfg = smdl::harness::load_config(config_path, ov);
    const auto out = smdl::harness::run_command(command, cfg);
    std::cout << command << ": " << out.summary << "\n";
    for (const auto& f : out.files) std::cout << "  wrote " << f << "\n";
    if (out.violations) {
      std::cerr << command << ": validator violations found\n";
      return kValidationFailure;
    }
    return 0;
  } catch (const smdl::Error& e) {
    // run_command already names the subcommand; config errors name the key instead.
    std::cerr << "smdl: " << e.what() << " [" << smdl::to_string(e.kind()) << "]\n";
    return smdl::is_numerical(e.kind()) ? kNumericalFailure : kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "smdl " << command << ": " << e.what() << "\n";
    return kNumericalFailure;
  }
}
