#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scribseg::data {

// Per-pixel class encoding used throughout the on-disk format and in memory:
// 0=BG, 1=RV, 2=Myo, 3=LV; 255 marks pixels a scribble leaves unlabeled.
inline constexpr std::uint8_t kUnlabeled = 255;
inline constexpr int kNumClasses = 4;
inline constexpr std::array<const char*, 4> kClassNames = {"BG", "RV", "Myo", "LV"};

struct ImageVolume {
  int d = 0, h = 0, w = 0;
  std::vector<double> voxels;                  // [slice][row][col]
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per (slice,row,col)
  std::string patient_id;
  std::string frame_id;

  double at(int z, int y, int x) const {
    return voxels[(static_cast<size_t>(z) * h + y) * w + x];
  }
  double& at(int z, int y, int x) {
    return voxels[(static_cast<size_t>(z) * h + y) * w + x];
  }
};

// Sparse annotation volume; values in {0..num_classes-1} or kUnlabeled.
struct ScribbleMask {
  int d = 0, h = 0, w = 0;
  std::vector<std::uint8_t> labels;
  int num_classes = kNumClasses;
};

// Dense annotation volume; every voxel has a valid class id.
struct DenseLabel {
  int d = 0, h = 0, w = 0;
  std::vector<std::uint8_t> labels;
};

struct ImageSlice {
  int h = 0, w = 0;
  std::vector<double> v;

  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
};

struct LabelSlice {
  int h = 0, w = 0;
  std::vector<std::uint8_t> v;

  std::uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  std::uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
};

struct Provenance {
  std::string patient_id;
  std::string frame_id;
  int slice_index = 0;
};

// One 2D training/evaluation unit: image in [0,1], scribble slice, and the
// dense slice when the caller is allowed to see it.
struct SliceSample {
  ImageSlice image;
  LabelSlice scribble;
  std::optional<LabelSlice> dense;
  Provenance prov;
};

struct FrameRecord {
  ImageVolume image;
  ScribbleMask scribble;
  std::optional<DenseLabel> dense;
};

// Patient-level fold assignment; all slices of a patient share a fold.
struct FoldSplit {
  int k = 0;
  std::vector<std::pair<std::string, int>> assignments;  // sorted by patient id

  int fold_of(const std::string& patient_id) const;
};

}  // namespace scribseg::data
