#pragma once

#include <string>

#include "stimpute/training.hpp"

namespace stimpute {

/// Versioned single-file archive: magic + JSON directory (schedule metadata,
/// config hash, tensor table) + raw little-endian float64 payload. Parameter
/// values and Adam moments round-trip bit-exactly.
void save_checkpoint(const std::string& path, const ModelSet& m,
                     const std::string& config_hash);

struct CheckpointInfo {
    int version = 0;
    std::string config_hash;
    int T = 0;
    double beta_1 = 0.0;
    double beta_T = 0.0;
    std::string shape;
};

CheckpointInfo read_checkpoint_info(const std::string& path);

/// Loads parameters by name into a model built from the same configuration.
/// Throws when the schedule metadata disagrees with the model's schedule or a
/// tensor is missing or misshaped.
void load_checkpoint(const std::string& path, ModelSet& m);

}  // namespace stimpute
