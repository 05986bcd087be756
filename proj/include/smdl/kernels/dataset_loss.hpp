#pragma once

#include <span>

#include "smdl/kernels/exec.hpp"
#include "smdl/zoo/mlp.hpp"

namespace smdl::kernels {

inline constexpr std::size_t kLossChunk = 64;

// Mean loss over the whole dataset, summed in fixed row chunks merged in order.
double dataset_loss(const zoo::MlpModel& model, std::span<const double> params, const zoo::Dataset& data,
                    Exec exec = Exec::parallel);
double dataset_loss_serial(const zoo::MlpModel& model, std::span<const double> params, const zoo::Dataset& data);

}  // namespace smdl::kernels
