#include "scribseg/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scribseg/data/dataset.hpp"
#include "scribseg/errors.hpp"

namespace scribseg::data {

namespace {

struct Geometry {
  double cy, cx;        // LV center
  double r_lv, r_myo;   // disk and annulus outer radius
  double rv_cy, rv_cx;  // RV disk center
  double r_rv;
};

Geometry draw_geometry(int h, int w, Rng& rng) {
  const double s = std::min(h, w);
  Geometry g;
  g.cy = h / 2.0 + rng.uniform(-0.04, 0.04) * h;
  g.cx = w / 2.0 + rng.uniform(-0.04, 0.04) * w;
  g.r_lv = rng.uniform(0.17, 0.22) * s;
  g.r_myo = g.r_lv + rng.uniform(0.07, 0.10) * s;
  g.r_rv = rng.uniform(0.11, 0.15) * s;
  const double phi = rng.uniform(0.0, 6.283185307179586);
  const double dist = g.r_myo + 0.40 * g.r_rv;
  g.rv_cy = g.cy + dist * std::sin(phi);
  g.rv_cx = g.cx + dist * std::cos(phi);
  return g;
}

// Longitudinal modulation: structures taper slightly toward the volume ends
// but never vanish, so every slice carries all four classes.
double taper(int z, int depth) {
  if (depth <= 1) return 1.0;
  const double u = (z - (depth - 1) / 2.0) / ((depth - 1) / 2.0);
  return std::sqrt(1.0 - 0.35 * u * u);
}

std::uint8_t classify(const Geometry& g, double m, int y, int x) {
  const double d_lv = std::hypot(y - g.cy, x - g.cx);
  if (d_lv <= g.r_lv * m) return 3;   // LV
  if (d_lv <= g.r_myo * m) return 2;  // Myo
  const double d_rv = std::hypot(y - g.rv_cy, x - g.rv_cx);
  if (d_rv <= g.r_rv * m) return 1;   // RV crescent: RV disk minus the annulus
  return 0;
}

}  // namespace

void synthesize_dataset(const std::filesystem::path& root, const SynthConfig& cfg) {
  if (cfg.n_patients < 1) throw ValidationError("synthesize_dataset: n_patients >= 1");
  if (cfg.height < 32 || cfg.width < 32) {
    throw ValidationError("synthesize_dataset: height/width must be >= 32 to fit structures");
  }
  if (cfg.depth < 1) throw ValidationError("synthesize_dataset: depth >= 1");

  Rng rng = Rng::derive(cfg.seed, rng_stream::kSynth);
  const int d = cfg.depth, h = cfg.height, w = cfg.width;
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  for (int p = 0; p < cfg.n_patients; ++p) {
    const Geometry geo = draw_geometry(h, w, rng);
    // Per-patient class means (BG, RV, Myo, LV), ordered with modest gaps:
    // identity is resolvable at region scale, but the noise level keeps
    // single pixels ambiguous between neighboring classes.
    const std::array<double, 4> mean = {
        rng.uniform(0.03, 0.15), rng.uniform(0.42, 0.58),
        rng.uniform(0.22, 0.38), rng.uniform(0.75, 0.92)};

    for (int f = 0; f < 2; ++f) {
      // Second frame mimics systole: the cavity contracts, the wall keeps
      // its thickness.
      Geometry g = geo;
      if (f == 1) {
        const double shrink = rng.uniform(0.75, 0.90);
        const double wall = g.r_myo - g.r_lv;
        g.r_lv *= shrink;
        g.r_myo = g.r_lv + wall;
      }
      const double drift_y = rng.uniform(-cfg.drift_amplitude, cfg.drift_amplitude);
      const double drift_x = rng.uniform(-cfg.drift_amplitude, cfg.drift_amplitude);

      FrameRecord rec;
      auto& img = rec.image;
      img.d = d;
      img.h = h;
      img.w = w;
      img.spacing = cfg.spacing_mm;
      char buf[16];
      std::snprintf(buf, sizeof buf, "%03d", p);
      img.patient_id = buf;
      img.frame_id = f == 0 ? "01" : "02";
      img.voxels.resize(static_cast<std::size_t>(d) * hw);

      DenseLabel dense;
      dense.d = d;
      dense.h = h;
      dense.w = w;
      dense.labels.resize(img.voxels.size());

      for (int z = 0; z < d; ++z) {
        const double m = taper(z, d);
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const std::size_t idx = (static_cast<std::size_t>(z) * h + y) * w + x;
            const std::uint8_t c = classify(g, m, y, x);
            dense.labels[idx] = c;
            const double drift = drift_y * (static_cast<double>(y) / h - 0.5) +
                                 drift_x * (static_cast<double>(x) / w - 0.5);
            const double v = mean[c] + drift + cfg.noise_sigma * rng.normal();
            img.voxels[idx] = std::clamp(v, 0.0, 1.0);
          }
        }
        for (int c = 0; c < kNumClasses; ++c) {
          const auto* base = dense.labels.data() + static_cast<std::size_t>(z) * hw;
          if (std::find(base, base + hw, static_cast<std::uint8_t>(c)) == base + hw) {
            throw ValidationError("synthesize_dataset: class " +
                                  std::string(kClassNames[c]) +
                                  " missing on a generated slice; shape too small");
          }
        }
      }

      rec.scribble = synthesize_scribbles(dense, rng);
      rec.dense = std::move(dense);
      write_frame(root, rec);
    }
  }
}

namespace {

std::vector<std::uint8_t> erode4(const std::vector<std::uint8_t>& mask, int h, int w) {
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!mask[i]) continue;
      const bool keep = y > 0 && y < h - 1 && x > 0 && x < w - 1 &&
                        mask[i - static_cast<std::size_t>(w)] && mask[i + static_cast<std::size_t>(w)] &&
                        mask[i - 1] && mask[i + 1];
      out[i] = keep ? 1 : 0;
    }
  }
  return out;
}

bool any(const std::vector<std::uint8_t>& m) {
  return std::find(m.begin(), m.end(), static_cast<std::uint8_t>(1)) != m.end();
}

// Chebyshev distance to the foreground, saturated at `cap`.
std::vector<int> chebyshev_distance(const std::vector<std::uint8_t>& fg, int h, int w,
                                    int cap) {
  std::vector<int> dist(fg.size(), -1);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    if (fg[i]) {
      dist[i] = 0;
      frontier.push_back(i);
    }
  }
  for (int step = 1; step <= cap && !frontier.empty(); ++step) {
    std::vector<std::size_t> next;
    for (std::size_t i : frontier) {
      const int y = static_cast<int>(i) / w, x = static_cast<int>(i) % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (dist[ni] == -1) {
            dist[ni] = step;
            next.push_back(ni);
          }
        }
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

}  // namespace

LabelSlice synthesize_scribbles(const LabelSlice& dense, Rng& rng) {
  const int h = dense.h, w = dense.w;
  LabelSlice out;
  out.h = h;
  out.w = w;
  out.v.assign(dense.v.size(), kUnlabeled);

  std::vector<std::uint8_t> fg_union(dense.v.size(), 0);
  bool has_fg = false;
  for (std::size_t i = 0; i < dense.v.size(); ++i) {
    if (dense.v[i] > 0 && dense.v[i] < kNumClasses) {
      fg_union[i] = 1;
      has_fg = true;
    }
  }

  // Foreground: erode each class down to the last non-empty set.
  for (std::uint8_t c = 1; c < kNumClasses; ++c) {
    std::vector<std::uint8_t> mask(dense.v.size(), 0);
    bool present = false;
    for (std::size_t i = 0; i < dense.v.size(); ++i) {
      if (dense.v[i] == c) {
        mask[i] = 1;
        present = true;
      }
    }
    if (!present) continue;
    for (;;) {
      auto eroded = erode4(mask, h, w);
      if (!any(eroded)) break;
      mask = std::move(eroded);
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) out.v[i] = c;
    }
  }

  // Background: one curve near the foreground boundary.
  bool bg_present = false;
  for (std::uint8_t v : dense.v) {
    if (v == 0) {
      bg_present = true;
      break;
    }
  }
  if (bg_present) {
    bool labeled = false;
    if (has_fg) {
      const auto dist = chebyshev_distance(fg_union, h, w, 10);
      int d_target = 3 + static_cast<int>(rng.uniform_int(8));  // 3..10
      for (int d = d_target; d >= 1 && !labeled; --d) {
        for (std::size_t i = 0; i < dense.v.size(); ++i) {
          if (dense.v[i] == 0 && dist[i] == d) {
            out.v[i] = 0;
            labeled = true;
          }
        }
      }
      if (!labeled) {
        // Background squeezed against the foreground: label its farthest pixel.
        std::size_t best = 0;
        int best_d = -2;
        for (std::size_t i = 0; i < dense.v.size(); ++i) {
          const int di = dist[i] == -1 ? 11 : dist[i];
          if (dense.v[i] == 0 && di > best_d) {
            best_d = di;
            best = i;
          }
        }
        out.v[best] = 0;
        labeled = true;
      }
    } else {
      // No foreground at all: draw a circle around the slice center.
      const double r = std::min(h, w) / 4.0;
      const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (std::abs(std::hypot(y - cy, x - cx) - r) <= 0.5) {
            out.v[static_cast<std::size_t>(y) * w + x] = 0;
            labeled = true;
          }
        }
      }
      if (!labeled) out.v[0] = 0;
    }
  }

  return out;
}

ScribbleMask synthesize_scribbles(const DenseLabel& dense, Rng& rng) {
  ScribbleMask out;
  out.d = dense.d;
  out.h = dense.h;
  out.w = dense.w;
  out.labels.reserve(dense.labels.size());
  const std::size_t hw = static_cast<std::size_t>(dense.h) * dense.w;
  for (int z = 0; z < dense.d; ++z) {
    LabelSlice slice;
    slice.h = dense.h;
    slice.w = dense.w;
    slice.v.assign(dense.labels.begin() + static_cast<std::ptrdiff_t>(z) * static_cast<std::ptrdiff_t>(hw),
                   dense.labels.begin() + static_cast<std::ptrdiff_t>(z + 1) * static_cast<std::ptrdiff_t>(hw));
    const LabelSlice scr = synthesize_scribbles(slice, rng);
    out.labels.insert(out.labels.end(), scr.v.begin(), scr.v.end());
  }
  return out;
}

}  // namespace scribseg::data
