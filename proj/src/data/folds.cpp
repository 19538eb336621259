#include "scribseg/data/folds.hpp"

#include <algorithm>

#include "scribseg/errors.hpp"
#include "scribseg/rng.hpp"

namespace scribseg::data {

FoldSplit split_folds(std::vector<std::string> patient_ids, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("split_folds: k must be >= 2");
  if (static_cast<std::size_t>(k) > patient_ids.size()) {
    throw ValidationError("split_folds: k=" + std::to_string(k) + " exceeds " +
                          std::to_string(patient_ids.size()) + " patients");
  }

  // Canonical order first so the shuffle depends only on the id set and seed.
  std::sort(patient_ids.begin(), patient_ids.end());
  patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()),
                    patient_ids.end());

  Rng rng = Rng::derive(seed, rng_stream::kFolds);
  for (std::size_t i = patient_ids.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_int(i);
    std::swap(patient_ids[i - 1], patient_ids[j]);
  }

  FoldSplit split;
  split.k = k;
  for (std::size_t i = 0; i < patient_ids.size(); ++i) {
    split.assignments.emplace_back(patient_ids[i], static_cast<int>(i % k));
  }
  std::sort(split.assignments.begin(), split.assignments.end());
  return split;
}

}  // namespace scribseg::data
