#include "smdl/kernels/dataset_loss.hpp"

#include <algorithm>
#include <vector>

#include "smdl/core/error.hpp"

namespace smdl::kernels {

namespace {

double chunk_sum(const zoo::MlpModel& model, std::span<const double> params, const zoo::Dataset& data,
                 std::size_t c) {
  const std::size_t lo = c * kLossChunk;
  const std::size_t hi = std::min(data.size(), lo + kLossChunk);
  return model.loss_sum(params, data, lo, hi);
}

}  // namespace

double dataset_loss_serial(const zoo::MlpModel& model, std::span<const double> params, const zoo::Dataset& data) {
  const std::size_t chunks = (data.size() + kLossChunk - 1) / kLossChunk;
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) total += chunk_sum(model, params, data, c);
  return total / static_cast<double>(data.size());
}

double dataset_loss(const zoo::MlpModel& model, std::span<const double> params, const zoo::Dataset& data,
                    Exec exec) {
  if (exec == Exec::serial) return dataset_loss_serial(model, params, data);
  // Validate up front: exceptions must not escape the parallel region.
  require(params.size() == model.parameter_count(), "dataset loss: parameter length mismatch");
  require(data.size() >= 1 && data.inputs.cols() == model.input_size() &&
              data.targets.cols() == model.output_size(),
          "dataset loss: dataset shape does not match model");
  const std::size_t chunks = (data.size() + kLossChunk - 1) / kLossChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c)
    partial[c] = chunk_sum(model, params, data, static_cast<std::size_t>(c));
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(data.size());
}

}  // namespace smdl::kernels
