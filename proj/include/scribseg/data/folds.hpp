#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribseg/data/types.hpp"

namespace scribseg::data {

// Deterministic patient-level split: seeded shuffle, then round-robin.
// Fold sizes differ by at most one.
FoldSplit split_folds(std::vector<std::string> patient_ids, int k, std::uint64_t seed);

}  // namespace scribseg::data
