#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scribseg/data/types.hpp"

namespace scribseg::metrics {

struct BinaryVolume {
  std::int64_t d = 0, h = 0, w = 0;
  std::vector<std::uint8_t> mask;                // 0/1
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per (slice,row,col)

  bool at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return mask[(static_cast<std::size_t>(z) * h + y) * w + x] != 0;
  }
  bool empty() const;
};

struct StructureMetrics {
  double dsc = 0.0;
  double hd95 = 0.0;
  bool pred_empty = false;
  bool gt_empty = false;
  bool hd95_sentinel = false;
};

// One 3D case; structures indexed RV=0, Myo=1, LV=2 (classes 1..3).
struct CaseMetrics {
  std::string case_id;
  std::array<StructureMetrics, 3> structures;

  double mean_dsc() const;
  double mean_hd95() const;
};

struct Hd95Result {
  double value = 0.0;
  bool sentinel = false;
};

struct AggregateCell {
  double mean = 0.0;
  double stddev = 0.0;  // population std
};

// Columns RV, Myo, LV plus the per-case three-structure mean.
struct AggregateTable {
  std::array<AggregateCell, 4> dsc;
  std::array<AggregateCell, 4> hd95;
  int n_cases = 0;
  int n_hd95_sentinel = 0;
};

struct PairedTestResult {
  double statistic = 0.0;  // paired t statistic
  double p_value = 1.0;    // two-sided sign-flip permutation p
  bool exhaustive = false;
};

double dsc3d(const BinaryVolume& pred, const BinaryVolume& gt);

// Foreground voxels with at least one background (or out-of-bounds) 6-neighbor.
std::vector<std::array<std::int64_t, 3>> extract_surface(const BinaryVolume& vol);

// 95th percentile (linear interpolation) of the union of both directed
// surface-distance sets, in mm. One side empty -> volume diagonal sentinel.
Hd95Result hd95(const BinaryVolume& pred, const BinaryVolume& gt);

CaseMetrics evaluate_case(const data::DenseLabel& pred, const data::DenseLabel& gt,
                          const std::array<double, 3>& spacing_mm,
                          const std::string& case_id = "");

AggregateTable aggregate(const std::vector<CaseMetrics>& cases);

// Paired t statistic; p-value from a two-sided sign-flip permutation test
// (exhaustive for n <= 14, otherwise 1e4 seeded flips).
PairedTestResult paired_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace scribseg::metrics
