#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smdl/compress/compress.hpp"
#include "smdl/llc/llc.hpp"
#include "smdl/mdl/mdl.hpp"
#include "smdl/volume/volume.hpp"
#include "smdl/zoo/landscape.hpp"
#include "smdl/zoo/mlp.hpp"

namespace smdl::harness {

struct LandscapeSpec {
  std::string kind;  // quadratic | normal_crossing | bernoulli_kl
  std::size_t d = 2;
  std::vector<int> exponents;
  std::vector<std::size_t> active;
  double bound = 1.0;  // W = [-bound, bound]^d

  std::string label() const;
};

zoo::LandscapePtr make_landscape(const LandscapeSpec& spec);

struct VolumeSection {
  std::vector<LandscapeSpec> landscapes;
  int ladder_lo = 2;  // ε from 2^-ladder_hi to 2^-ladder_lo
  int ladder_hi = 10;
  std::uint64_t samples = 1000000;
  std::optional<int> multiplicity;  // empty = select by fit
  std::vector<double> bits_epsilons{0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
};

struct QuantizeSection {
  compress::CriticalConfig critical;
  std::vector<std::size_t> curve{4, 6, 8, 12, 16, 24, 32, 48, 64};
};

struct FactorizeSection {
  std::vector<std::size_t> layers;  // empty = all hidden-to-hidden matrices
};

struct NoiseSection {
  compress::NoiseMode mode = compress::NoiseMode::relative;
  compress::SigmaSearchConfig search;
  std::vector<double> curve{1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1};
};

struct PruneSection {
  std::vector<double> fractions{0.9, 0.8, 0.7, 0.6, 0.5};  // kept fraction of hidden units
  std::int64_t retrain_steps = 1000;
};

struct MdlSection {
  std::vector<std::uint64_t> ns{64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384};
  double a = 1.0;
  std::size_t seeds = 50;
  mdl::NetConfig net;
};

struct AuditSection {
  std::size_t instances = 10000;
  double m_simplex = 0.2;
  std::size_t outcomes = 3;
  std::size_t inclusion_configs = 20;
  std::uint64_t inclusion_samples = 200000;
  std::vector<std::uint64_t> fluctuation_ns{1000, 10000};
  std::size_t fluctuation_trials = 10000;
};

struct AnalyzeSection {
  std::string scheme = "quantize";
  std::string sweep_csv;  // default <output_dir>/<scheme>_sweep.csv
  std::string llc_csv;    // default <output_dir>/llc.csv
  std::vector<std::int64_t> exclude_steps;
  bool gnuplot = false;
};

struct ExperimentConfig {
  zoo::MlpSpec model{{4, 16, 16, 4}, zoo::Activation::tanh, zoo::LossKind::mse};
  zoo::TeacherConfig data;
  zoo::TrainConfig training;
  llc::LlcConfig llc;
  QuantizeSection quantize;
  FactorizeSection factorize;
  NoiseSection noise;
  PruneSection prune;
  VolumeSection volume;
  MdlSection mdl;
  AuditSection audit;
  AnalyzeSection analyze;
  std::vector<double> epsilons{0.25, 0.5, 1.0};
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // FNV-1a of the canonical JSON the config was parsed from (after CLI overrides,
  // without output_dir).
  std::uint64_t hash = 0;
  std::string canonical_json;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::vector<double>> epsilons;
};

// Parses JSON text. Unknown keys, wrong types and out-of-range values raise
// ErrorKind::config with a message naming the dotted key.
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

std::string hash_hex(std::uint64_t h);

}  // namespace smdl::harness
