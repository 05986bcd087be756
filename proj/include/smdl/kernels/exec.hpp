#pragma once

namespace smdl::kernels {

// Execution policy for the data-parallel kernels. Both policies produce bitwise-identical
// results: work is split into fixed chunks whose partial results are merged in chunk order.
enum class Exec { serial, parallel };

// Number of worker threads the parallel policy would use.
int worker_count();

}  // namespace smdl::kernels
