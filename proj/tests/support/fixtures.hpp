#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scribseg/rng.hpp"
#include "scribseg/tensor.hpp"

namespace fixtures {

// Fresh scratch directory under the system temp root; wiped on creation so
// reruns start clean.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("scribseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline scribseg::Tensor random_tensor(std::vector<std::int64_t> shape, scribseg::Rng& rng,
                                      double lo = 0.0, double hi = 1.0) {
  scribseg::Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Random per-pixel probability tensor: positive entries, channels sum to 1.
inline scribseg::Tensor random_probs(std::int64_t b, std::int64_t c, std::int64_t h,
                                     std::int64_t w, scribseg::Rng& rng) {
  scribseg::Tensor t({b, c, h, w});
  const std::int64_t hw = h * w;
  for (std::int64_t bi = 0; bi < b; ++bi) {
    for (std::int64_t p = 0; p < hw; ++p) {
      double sum = 0.0;
      for (std::int64_t ci = 0; ci < c; ++ci) {
        const double v = 0.05 + rng.uniform();
        t[(bi * c + ci) * hw + p] = v;
        sum += v;
      }
      for (std::int64_t ci = 0; ci < c; ++ci) t[(bi * c + ci) * hw + p] /= sum;
    }
  }
  return t;
}

}  // namespace fixtures
