#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smdl/core/matrix.hpp"
#include "smdl/zoo/objective.hpp"

namespace smdl::zoo {

enum class Activation { tanh, identity };
enum class LossKind { mse, cross_entropy };

struct MlpSpec {
  std::vector<std::size_t> layers;  // input, hidden..., output
  Activation activation = Activation::tanh;
  LossKind loss = LossKind::mse;

  std::uint64_t hash() const;
};

// Position of one dense layer inside the flat parameter vector: the weight matrix
// (out x in, row-major) starts at `weight_offset`, followed by `out` biases.
struct LayerSlot {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

struct Dataset {
  core::Matrix inputs;   // n x d_in
  core::Matrix targets;  // n x d_out

  std::size_t size() const noexcept { return inputs.rows(); }
};

class MlpModel {
 public:
  explicit MlpModel(MlpSpec spec);

  const MlpSpec& spec() const noexcept { return spec_; }
  std::size_t parameter_count() const noexcept { return count_; }
  std::size_t layer_count() const noexcept { return slots_.size(); }
  const LayerSlot& layer(std::size_t i) const { return slots_.at(i); }
  std::size_t input_size() const { return spec_.layers.front(); }
  std::size_t output_size() const { return spec_.layers.back(); }

  core::Matrix weight(std::span<const double> params, std::size_t layer) const;
  void set_weight(std::span<double> params, std::size_t layer, const core::Matrix& w) const;

  void forward(std::span<const double> params, std::span<const double> x, std::span<double> out) const;

  // Sum (not mean) of per-sample losses over rows [begin, end). When `grad` is
  // non-empty the gradient of that sum is accumulated into it.
  double loss_sum(std::span<const double> params, const Dataset& data, std::size_t begin,
                  std::size_t end, std::span<double> grad = {}) const;

  // Mean loss and its gradient over rows [begin, end).
  double loss_and_grad(std::span<const double> params, const Dataset& data, std::size_t begin,
                       std::size_t end, std::span<double> grad) const;
  double mean_loss(std::span<const double> params, const Dataset& data) const;

  // Gaussian initialization with standard deviation scale/sqrt(fan_in); biases zero.
  std::vector<double> initialize(double scale, std::uint64_t seed) const;

 private:
  void check_params(std::span<const double> params) const;

  MlpSpec spec_;
  std::vector<LayerSlot> slots_;
  std::size_t count_ = 0;
};

struct TeacherConfig {
  std::size_t samples = 1024;
  double weight_scale = 1.0;
  double output_noise = 0.0;
  std::uint64_t seed = 7;
};

// Inputs ~ N(0, I); targets from a randomly initialized teacher with the same spec.
// For cross-entropy the teacher's softmax output is used as a soft target.
Dataset make_teacher_dataset(const MlpModel& model, const TeacherConfig& cfg);

// Minibatch view of an MLP loss for the sampler: batch b covers rows
// [b*batch_size, (b+1)*batch_size). batch_size == 0 means full batch.
class MlpObjective final : public Objective {
 public:
  MlpObjective(const MlpModel& model, const Dataset& data, std::size_t batch_size);

  std::size_t dimension() const override { return model_.parameter_count(); }
  std::size_t batch_count() const override { return batches_; }
  double loss(std::span<const double> w, std::size_t batch) const override;
  double loss_and_grad(std::span<const double> w, std::size_t batch, std::span<double> grad) const override;

 private:
  std::pair<std::size_t, std::size_t> rows(std::size_t batch) const;

  const MlpModel& model_;
  const Dataset& data_;
  std::size_t batch_size_;
  std::size_t batches_;
};

struct Checkpoint {
  std::int64_t step = 0;
  std::vector<double> params;
  double train_loss = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t spec_hash = 0;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);
std::string checkpoint_filename(std::int64_t step);

struct TrainConfig {
  std::int64_t steps = 1000;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double init_scale = 0.05;
  std::vector<std::int64_t> schedule;
};

struct TrainTrace {
  std::vector<Checkpoint> checkpoints;
  double min_loss = 0.0;  // smallest full-data loss seen at any evaluated step
  double final_loss = 0.0;
  std::vector<double> final_params;
};

// Plain minibatch SGD from `init` (or a fresh initialization when empty). Each epoch
// visits a seeded permutation of the rows. `mask`, when given, multiplies every
// gradient so masked coordinates never move. When `track_min` is set the full-data
// loss is evaluated after every step. Checkpoints are written to `out_dir` when non-empty.
TrainTrace train_sgd(const MlpModel& model, const Dataset& data, const TrainConfig& cfg,
                     std::span<const double> init = {}, std::span<const double> mask = {},
                     bool track_min = false, const std::string& out_dir = {});

}  // namespace smdl::zoo
