#pragma once

#include <string>
#include <vector>

#include "smdl/harness/config.hpp"

namespace smdl::harness {

// train-toy, estimate-llc, volume-fit, quantize-sweep, factorize-sweep, noise-sweep,
// prune-sweep, mdl-redundancy, lemma-audit, analyze.
const std::vector<std::string>& command_names();

struct CommandOutput {
  std::vector<std::string> files;  // written paths, in write order
  std::string summary;             // one human-readable line
  bool violations = false;         // lemma-audit found a violated inequality
};

// First line of every CSV: command, config hash, seed and version. No timestamps, so
// reruns with the same config and seed produce identical bytes.
std::string manifest_line(const std::string& command, const ExperimentConfig& cfg);

// Runs one subcommand, writing its outputs under cfg.output_dir. Module errors are
// rethrown with the same kind and the subcommand name prefixed to the message.
CommandOutput run_command(const std::string& command, const ExperimentConfig& cfg);

// Bound used for MLP parameters in the sampler; wide enough never to bind in practice.
inline constexpr double kMlpParameterBound = 100.0;

}  // namespace smdl::harness
