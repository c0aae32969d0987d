#pragma once

#include "stimpute/dataset.hpp"

namespace stimpute {

enum class BaselineMethod { kMean, kLinear };

BaselineMethod baseline_from_string(const std::string& s);

/// Sanity-check imputers in original units. Returns a complete [N, L] matrix:
/// observed cells verbatim, everything else filled. MEAN fills with each
/// node's observed average (global observed average for a silent node);
/// LINEAR interpolates each node through time.
Tensor baseline_impute(const Window& w, BaselineMethod method);

}  // namespace stimpute
