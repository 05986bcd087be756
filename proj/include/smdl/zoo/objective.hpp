#pragma once

#include <cstddef>
#include <span>

namespace smdl::zoo {

// Anything the Langevin sampler can run on: a loss over flat parameters, optionally
// split into minibatches. Implementations must be safe for concurrent const calls.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;

  // Number of minibatches; 0 means the loss is deterministic and `batch` is ignored.
  virtual std::size_t batch_count() const { return 0; }

  virtual double loss(std::span<const double> w, std::size_t batch) const = 0;
  virtual double loss_and_grad(std::span<const double> w, std::size_t batch,
                               std::span<double> grad) const = 0;
};

}  // namespace smdl::zoo
