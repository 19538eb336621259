#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "scribseg/data/types.hpp"
#include "scribseg/rng.hpp"

namespace scribseg::data {

struct SynthConfig {
  int n_patients = 20;
  int depth = 8;
  int height = 64;
  int width = 64;
  std::uint64_t seed = 1234;
  // Intensity model: per-patient class means with overlapping ranges, a smooth
  // per-frame gradient, and per-voxel Gaussian noise. Keeps intensity alone
  // from separating the classes.
  double noise_sigma = 0.08;
  double drift_amplitude = 0.15;
  std::array<double, 3> spacing_mm{10.0, 1.0, 1.0};
};

// Writes `n_patients` patients (2 frames each) in the repo layout. Every slice
// contains a bright disk (LV) inside an annulus (Myo) with an adjacent
// crescent (RV) on a darker background; geometry is randomized per patient.
void synthesize_dataset(const std::filesystem::path& root, const SynthConfig& cfg);

// Scribbles for one dense slice: each foreground class is eroded down to the
// last non-empty set (a thin curve), the background gets one curve 3-10 px
// outside the foreground. Everything else is kUnlabeled.
LabelSlice synthesize_scribbles(const LabelSlice& dense, Rng& rng);

// Volume-level wrapper; slices are processed in order.
ScribbleMask synthesize_scribbles(const DenseLabel& dense, Rng& rng);

}  // namespace scribseg::data
