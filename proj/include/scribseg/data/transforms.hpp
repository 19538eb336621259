#pragma once

#include "scribseg/data/types.hpp"
#include "scribseg/rng.hpp"

namespace scribseg::data {

// Per-slice min-max rescale to [0,1]; constant slices map to all zeros.
ImageVolume normalize_intensity(const ImageVolume& volume);

ImageSlice resize_bilinear(const ImageSlice& in, int th, int tw);
LabelSlice resize_nearest(const LabelSlice& in, int th, int tw);

// Image is resampled bilinearly, label channels with nearest-neighbor.
SliceSample resize_sample(const SliceSample& sample, int th, int tw);

struct AugmentConfig {
  double rotate_prob = 0.5;
  double flip_prob = 0.5;
  double noise_prob = 0.5;
  double noise_sigma_max = 0.05;
  // Default rotations are exact 90-degree multiples so labels are pure pixel
  // permutations. Free-angle mode resamples instead.
  bool free_rotation = false;
  double max_angle_deg = 20.0;
};

// Applies, each with its own probability: rotation, flip over a random axis,
// additive Gaussian noise (image only, clipped to [0,1]). Geometric transforms
// hit image and label channels identically.
SliceSample augment(const SliceSample& sample, const AugmentConfig& cfg, Rng& rng);

}  // namespace scribseg::data
