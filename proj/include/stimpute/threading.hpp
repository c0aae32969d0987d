#pragma once

#include <cstdint>

namespace stimpute::threading {

/// Sets the worker-thread budget for the OpenMP kernels. 0 = hardware default.
void set_threads(int n);
int threads();

/// True when a kernel invocation of `work` flops should take the OpenMP path.
/// Falls back to the serial reference when the budget is 1, when the work is
/// too small to amortize a fork, or when already inside a parallel region
/// (ensemble sampling parallelizes across replicas instead).
bool use_parallel(int64_t work);

}  // namespace stimpute::threading
