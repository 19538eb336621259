#include "scribseg/data/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "scribseg/errors.hpp"

namespace scribseg::data {

ImageVolume normalize_intensity(const ImageVolume& volume) {
  ImageVolume out = volume;
  const std::size_t hw = static_cast<std::size_t>(volume.h) * volume.w;
  for (int z = 0; z < volume.d; ++z) {
    double* s = out.voxels.data() + static_cast<std::size_t>(z) * hw;
    double lo = s[0], hi = s[0];
    for (std::size_t i = 0; i < hw; ++i) {
      if (!std::isfinite(s[i])) {
        throw ValidationError("normalize_intensity: non-finite intensity in slice " +
                              std::to_string(z));
      }
      lo = std::min(lo, s[i]);
      hi = std::max(hi, s[i]);
    }
    const double range = hi - lo;
    if (range == 0.0) {
      std::fill(s, s + hw, 0.0);
    } else {
      for (std::size_t i = 0; i < hw; ++i) s[i] = (s[i] - lo) / range;
    }
  }
  return out;
}

namespace {

// Align-corners source coordinate: endpoints map onto endpoints exactly.
inline double src_coord(int dst, int dst_size, int src_size) {
  if (dst_size == 1) return 0.0;
  return static_cast<double>(dst) * (src_size - 1) / (dst_size - 1);
}

}  // namespace

ImageSlice resize_bilinear(const ImageSlice& in, int th, int tw) {
  if (th < 1 || tw < 1) throw ValidationError("resize: target dims must be >= 1");
  if (th == in.h && tw == in.w) return in;
  ImageSlice out;
  out.h = th;
  out.w = tw;
  out.v.resize(static_cast<std::size_t>(th) * tw);
  for (int y = 0; y < th; ++y) {
    const double sy = src_coord(y, th, in.h);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, in.h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < tw; ++x) {
      const double sx = src_coord(x, tw, in.w);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, in.w - 1);
      const double fx = sx - x0;
      const double top = in.at(y0, x0) * (1 - fx) + in.at(y0, x1) * fx;
      const double bot = in.at(y1, x0) * (1 - fx) + in.at(y1, x1) * fx;
      out.at(y, x) = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

LabelSlice resize_nearest(const LabelSlice& in, int th, int tw) {
  if (th < 1 || tw < 1) throw ValidationError("resize: target dims must be >= 1");
  if (th == in.h && tw == in.w) return in;
  LabelSlice out;
  out.h = th;
  out.w = tw;
  out.v.resize(static_cast<std::size_t>(th) * tw);
  for (int y = 0; y < th; ++y) {
    const int sy = std::min(static_cast<int>(src_coord(y, th, in.h) + 0.5), in.h - 1);
    for (int x = 0; x < tw; ++x) {
      const int sx = std::min(static_cast<int>(src_coord(x, tw, in.w) + 0.5), in.w - 1);
      out.at(y, x) = in.at(sy, sx);
    }
  }
  return out;
}

SliceSample resize_sample(const SliceSample& sample, int th, int tw) {
  SliceSample out;
  out.image = resize_bilinear(sample.image, th, tw);
  out.scribble = resize_nearest(sample.scribble, th, tw);
  if (sample.dense) out.dense = resize_nearest(*sample.dense, th, tw);
  out.prov = sample.prov;
  return out;
}

namespace {

// Quarter-turn rotations and flips applied as one pixel permutation shared by
// image and labels. k in {1,2,3} counts clockwise quarter turns.
template <typename T>
std::vector<T> rot90(const std::vector<T>& v, int h, int w, int k) {
  std::vector<T> out(v.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const T val = v[static_cast<std::size_t>(y) * w + x];
      std::size_t idx = 0;
      switch (k) {
        case 1: idx = static_cast<std::size_t>(x) * h + (h - 1 - y); break;
        case 2: idx = static_cast<std::size_t>(h - 1 - y) * w + (w - 1 - x); break;
        case 3: idx = static_cast<std::size_t>(w - 1 - x) * h + y; break;
      }
      out[idx] = val;
    }
  }
  return out;
}

template <typename T>
std::vector<T> flip(const std::vector<T>& v, int h, int w, int axis) {
  std::vector<T> out(v.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int yy = axis == 0 ? h - 1 - y : y;
      const int xx = axis == 1 ? w - 1 - x : x;
      out[static_cast<std::size_t>(yy) * w + xx] = v[static_cast<std::size_t>(y) * w + x];
    }
  }
  return out;
}

// Free-angle rotation: inverse-maps output pixels around the slice center.
// Image is sampled bilinearly (0 outside); labels nearest-neighbor with
// kUnlabeled outside for scribbles and BG for dense labels.
void rotate_free(SliceSample& s, double angle_deg) {
  const double a = angle_deg * 3.14159265358979323846 / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const int h = s.image.h, w = s.image.w;
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;

  ImageSlice img{h, w, std::vector<double>(s.image.v.size())};
  LabelSlice scr{h, w, std::vector<std::uint8_t>(s.scribble.v.size())};
  LabelSlice den;
  if (s.dense) den = LabelSlice{h, w, std::vector<std::uint8_t>(s.dense->v.size())};

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dy = y - cy, dx = x - cx;
      const double syf = ca * dy + sa * dx + cy;
      const double sxf = -sa * dy + ca * dx + cx;
      const bool inside = syf >= 0 && syf <= h - 1 && sxf >= 0 && sxf <= w - 1;
      if (inside) {
        const int y0 = static_cast<int>(syf), x0 = static_cast<int>(sxf);
        const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
        const double fy = syf - y0, fx = sxf - x0;
        img.at(y, x) = (s.image.at(y0, x0) * (1 - fx) + s.image.at(y0, x1) * fx) * (1 - fy) +
                       (s.image.at(y1, x0) * (1 - fx) + s.image.at(y1, x1) * fx) * fy;
        const int ny = std::min(static_cast<int>(syf + 0.5), h - 1);
        const int nx = std::min(static_cast<int>(sxf + 0.5), w - 1);
        scr.at(y, x) = s.scribble.at(ny, nx);
        if (s.dense) den.at(y, x) = s.dense->at(ny, nx);
      } else {
        img.at(y, x) = 0.0;
        scr.at(y, x) = kUnlabeled;
        if (s.dense) den.at(y, x) = 0;
      }
    }
  }
  s.image = std::move(img);
  s.scribble = std::move(scr);
  if (s.dense) s.dense = std::move(den);
}

}  // namespace

SliceSample augment(const SliceSample& sample, const AugmentConfig& cfg, Rng& rng) {
  SliceSample s = sample;

  if (rng.bernoulli(cfg.rotate_prob)) {
    if (cfg.free_rotation) {
      const double angle = rng.uniform(-cfg.max_angle_deg, cfg.max_angle_deg);
      rotate_free(s, angle);
    } else {
      const int k = 1 + static_cast<int>(rng.uniform_int(3));
      const int h = s.image.h, w = s.image.w;
      const int nh = (k == 2) ? h : w;
      const int nw = (k == 2) ? w : h;
      s.image.v = rot90(s.image.v, h, w, k);
      s.image.h = nh;
      s.image.w = nw;
      s.scribble.v = rot90(s.scribble.v, h, w, k);
      s.scribble.h = nh;
      s.scribble.w = nw;
      if (s.dense) {
        s.dense->v = rot90(s.dense->v, h, w, k);
        s.dense->h = nh;
        s.dense->w = nw;
      }
    }
  }

  if (rng.bernoulli(cfg.flip_prob)) {
    const int axis = static_cast<int>(rng.uniform_int(2));
    const int h = s.image.h, w = s.image.w;
    s.image.v = flip(s.image.v, h, w, axis);
    s.scribble.v = flip(s.scribble.v, h, w, axis);
    if (s.dense) s.dense->v = flip(s.dense->v, h, w, axis);
  }

  if (rng.bernoulli(cfg.noise_prob)) {
    const double sigma = rng.uniform(0.0, cfg.noise_sigma_max);
    for (double& v : s.image.v) {
      v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
    }
  }

  return s;
}

}  // namespace scribseg::data
