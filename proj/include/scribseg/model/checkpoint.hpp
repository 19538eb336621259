#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scribseg/model/unet.hpp"

namespace scribseg::model {

struct CheckpointMeta {
  std::int64_t iteration = 0;
  std::string config_hash;
};

// Writes manifest.json plus one f64 array container per parameter tensor.
// The directory is replaced atomically (tmp dir + rename), so a crash never
// leaves a half-written checkpoint behind.
void save_checkpoint(const std::filesystem::path& dir, DualBranchUNet& model,
                     const CheckpointMeta& meta);

// Loads parameters in place; names and shapes must match the model exactly.
CheckpointMeta load_checkpoint(const std::filesystem::path& dir, DualBranchUNet& model);

}  // namespace scribseg::model
