#include "scribseg/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scribseg/errors.hpp"
#include "scribseg/rng.hpp"

namespace scribseg::metrics {

namespace {

void check_shapes(const BinaryVolume& a, const BinaryVolume& b, const char* who) {
  if (a.d != b.d || a.h != b.h || a.w != b.w) {
    throw ValidationError(std::string(who) + ": volume shape mismatch");
  }
}

double percentile95(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 1) return v[0];
  const double rank = 0.95 * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= n) return v[n - 1];
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

double volume_diagonal_mm(const BinaryVolume& v) {
  const double dz = static_cast<double>(v.d) * v.spacing[0];
  const double dy = static_cast<double>(v.h) * v.spacing[1];
  const double dx = static_cast<double>(v.w) * v.spacing[2];
  return std::sqrt(dz * dz + dy * dy + dx * dx);
}

// Directed distances from each point of `from` to the nearest point of `to`.
void directed_distances(const std::vector<std::array<std::int64_t, 3>>& from,
                        const std::vector<std::array<std::int64_t, 3>>& to,
                        const std::array<double, 3>& spacing,
                        std::vector<double>& out) {
  for (const auto& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to) {
      const double dz = static_cast<double>(a[0] - b[0]) * spacing[0];
      const double dy = static_cast<double>(a[1] - b[1]) * spacing[1];
      const double dx = static_cast<double>(a[2] - b[2]) * spacing[2];
      const double d2 = dz * dz + dy * dy + dx * dx;
      if (d2 < best) best = d2;
    }
    out.push_back(std::sqrt(best));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

bool BinaryVolume::empty() const {
  return std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end();
}

double CaseMetrics::mean_dsc() const {
  return (structures[0].dsc + structures[1].dsc + structures[2].dsc) / 3.0;
}

double CaseMetrics::mean_hd95() const {
  return (structures[0].hd95 + structures[1].hd95 + structures[2].hd95) / 3.0;
}

double dsc3d(const BinaryVolume& pred, const BinaryVolume& gt) {
  check_shapes(pred, gt, "dsc3d");
  std::int64_t np = 0, ng = 0, ni = 0;
  const std::size_t n = pred.mask.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool p = pred.mask[i] != 0, g = gt.mask[i] != 0;
    np += p;
    ng += g;
    ni += p && g;
  }
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(np + ng);
}

std::vector<std::array<std::int64_t, 3>> extract_surface(const BinaryVolume& vol) {
  std::vector<std::array<std::int64_t, 3>> out;
  static constexpr int kOff[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                     {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
  for (std::int64_t z = 0; z < vol.d; ++z) {
    for (std::int64_t y = 0; y < vol.h; ++y) {
      for (std::int64_t x = 0; x < vol.w; ++x) {
        if (!vol.at(z, y, x)) continue;
        bool boundary = false;
        for (const auto& o : kOff) {
          const std::int64_t nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (nz < 0 || nz >= vol.d || ny < 0 || ny >= vol.h || nx < 0 || nx >= vol.w ||
              !vol.at(nz, ny, nx)) {
            boundary = true;
            break;
          }
        }
        if (boundary) out.push_back({z, y, x});
      }
    }
  }
  return out;
}

Hd95Result hd95(const BinaryVolume& pred, const BinaryVolume& gt) {
  check_shapes(pred, gt, "hd95");
  if (pred.spacing != gt.spacing) throw ValidationError("hd95: spacing mismatch");

  const bool pe = pred.empty(), ge = gt.empty();
  if (pe && ge) return {0.0, false};
  if (pe || ge) return {volume_diagonal_mm(pred), true};

  const auto sp = extract_surface(pred);
  const auto sg = extract_surface(gt);
  std::vector<double> dists;
  dists.reserve(sp.size() + sg.size());
  directed_distances(sp, sg, pred.spacing, dists);
  directed_distances(sg, sp, pred.spacing, dists);
  return {percentile95(dists), false};
}

CaseMetrics evaluate_case(const data::DenseLabel& pred, const data::DenseLabel& gt,
                          const std::array<double, 3>& spacing_mm,
                          const std::string& case_id) {
  if (pred.d != gt.d || pred.h != gt.h || pred.w != gt.w) {
    throw ValidationError("evaluate_case: shape mismatch");
  }
  for (std::uint8_t v : pred.labels) {
    if (v >= data::kNumClasses) throw ValidationError("evaluate_case: invalid pred label");
  }
  for (std::uint8_t v : gt.labels) {
    if (v >= data::kNumClasses) throw ValidationError("evaluate_case: invalid gt label");
  }

  CaseMetrics out;
  out.case_id = case_id;
  for (int cls = 1; cls < data::kNumClasses; ++cls) {
    BinaryVolume bp{pred.d, pred.h, pred.w, {}, spacing_mm};
    BinaryVolume bg{gt.d, gt.h, gt.w, {}, spacing_mm};
    bp.mask.resize(pred.labels.size());
    bg.mask.resize(gt.labels.size());
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
      bp.mask[i] = pred.labels[i] == cls;
      bg.mask[i] = gt.labels[i] == cls;
    }
    StructureMetrics& m = out.structures[static_cast<std::size_t>(cls - 1)];
    m.pred_empty = bp.empty();
    m.gt_empty = bg.empty();
    m.dsc = dsc3d(bp, bg);
    const Hd95Result h = hd95(bp, bg);
    m.hd95 = h.value;
    m.hd95_sentinel = h.sentinel;
  }
  return out;
}

AggregateTable aggregate(const std::vector<CaseMetrics>& cases) {
  if (cases.empty()) throw ValidationError("aggregate: no cases");
  AggregateTable table;
  table.n_cases = static_cast<int>(cases.size());

  for (int col = 0; col < 4; ++col) {
    std::vector<double> ds, hs;
    ds.reserve(cases.size());
    hs.reserve(cases.size());
    for (const CaseMetrics& c : cases) {
      if (col < 3) {
        ds.push_back(c.structures[static_cast<std::size_t>(col)].dsc);
        hs.push_back(c.structures[static_cast<std::size_t>(col)].hd95);
      } else {
        ds.push_back(c.mean_dsc());
        hs.push_back(c.mean_hd95());
      }
    }
    const double dm = mean_of(ds), hm = mean_of(hs);
    table.dsc[static_cast<std::size_t>(col)] = {dm, population_std(ds, dm)};
    table.hd95[static_cast<std::size_t>(col)] = {hm, population_std(hs, hm)};
  }
  for (const CaseMetrics& c : cases) {
    for (const StructureMetrics& s : c.structures) table.n_hd95_sentinel += s.hd95_sentinel;
  }
  return table;
}

PairedTestResult paired_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("paired_test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("paired_test: need at least 2 pairs");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = mean_of(d);
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);

  PairedTestResult res;
  if (var == 0.0) {
    res.statistic = mean == 0.0 ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(), mean);
  } else {
    res.statistic = mean / std::sqrt(var / static_cast<double>(n));
  }

  // Two-sided sign-flip permutation on |mean of flipped differences|.
  const double observed = std::abs(mean);
  if (n <= 14) {
    res.exhaustive = true;
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t hits = 0;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += (bits >> i) & 1 ? -d[i] : d[i];
      }
      if (std::abs(s / static_cast<double>(n)) >= observed) ++hits;
    }
    res.p_value = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    Rng rng = Rng::derive(0x9e3779b97f4a7c15ULL, rng_stream::kPermutation);
    const int trials = 10000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += rng.bernoulli(0.5) ? -d[i] : d[i];
      if (std::abs(s / static_cast<double>(n)) >= observed) ++hits;
    }
    res.p_value = static_cast<double>(1 + hits) / static_cast<double>(1 + trials);
  }
  return res;
}

}  // namespace scribseg::metrics
