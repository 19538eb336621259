#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "scribseg/data/types.hpp"
#include "scribseg/errors.hpp"
#include "scribseg/metrics/metrics.hpp"
#include "scribseg/rng.hpp"
#include "support/oracles.hpp"

using namespace scribseg;
using metrics::BinaryVolume;

namespace {

BinaryVolume make_vol(std::int64_t d, std::int64_t h, std::int64_t w,
                      std::array<double, 3> spacing = {1.0, 1.0, 1.0}) {
  BinaryVolume v;
  v.d = d;
  v.h = h;
  v.w = w;
  v.spacing = spacing;
  v.mask.assign(static_cast<std::size_t>(d * h * w), 0);
  return v;
}

void set_voxel(BinaryVolume& v, std::int64_t z, std::int64_t y, std::int64_t x) {
  v.mask[(static_cast<std::size_t>(z) * v.h + y) * v.w + x] = 1;
}

BinaryVolume random_vol(std::int64_t d, std::int64_t h, std::int64_t w, Rng& rng,
                        std::array<double, 3> spacing, double fill = 0.15) {
  BinaryVolume v = make_vol(d, h, w, spacing);
  for (auto& m : v.mask) m = rng.uniform() < fill;
  // Keep both surface extractions nonempty.
  v.mask[rng.uniform_int(v.mask.size())] = 1;
  return v;
}

}  // namespace

TEST_CASE("dsc3d oracle values") {
  BinaryVolume p = make_vol(2, 4, 4), g = make_vol(2, 4, 4);
  for (int i = 0; i < 8; ++i) p.mask[static_cast<std::size_t>(i)] = 1;
  for (int i = 4; i < 12; ++i) g.mask[static_cast<std::size_t>(i)] = 1;
  CHECK(metrics::dsc3d(p, g) == 0.5);

  BinaryVolume e0 = make_vol(2, 4, 4), e1 = make_vol(2, 4, 4);
  CHECK(metrics::dsc3d(e0, e1) == 1.0);
  CHECK(metrics::dsc3d(p, e0) == 0.0);
  CHECK(metrics::dsc3d(e0, p) == 0.0);
  CHECK(metrics::dsc3d(p, p) == 1.0);
}

TEST_CASE("dsc3d symmetry and permutation invariance") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    BinaryVolume p = random_vol(4, 5, 6, rng, {1, 1, 1});
    BinaryVolume g = random_vol(4, 5, 6, rng, {1, 1, 1});
    CHECK(metrics::dsc3d(p, g) == metrics::dsc3d(g, p));
    CHECK(metrics::dsc3d(p, g) == oracle::dsc(p, g));

    // dsc depends only on counts, so any shared reordering leaves it alone.
    BinaryVolume pp = p, gg = g;
    std::reverse(pp.mask.begin(), pp.mask.end());
    std::reverse(gg.mask.begin(), gg.mask.end());
    CHECK(metrics::dsc3d(pp, gg) == metrics::dsc3d(p, g));

    // Perfect agreement is the only way to reach 1 for nonempty masks.
    if (p.mask != g.mask) CHECK(metrics::dsc3d(p, g) < 1.0);
  }
}

TEST_CASE("surface extraction") {
  BinaryVolume single = make_vol(3, 3, 3);
  set_voxel(single, 1, 1, 1);
  const auto s1 = metrics::extract_surface(single);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0] == std::array<std::int64_t, 3>{1, 1, 1});

  // Solid 3x3x3 cube inside 5^3: every cube voxel except the center.
  BinaryVolume cube = make_vol(5, 5, 5);
  for (std::int64_t z = 1; z <= 3; ++z) {
    for (std::int64_t y = 1; y <= 3; ++y) {
      for (std::int64_t x = 1; x <= 3; ++x) set_voxel(cube, z, y, x);
    }
  }
  const auto sc = metrics::extract_surface(cube);
  CHECK(sc.size() == 26);
  for (const auto& v : sc) CHECK(v != std::array<std::int64_t, 3>{2, 2, 2});

  // Volume borders count as background: a full volume is all surface shell.
  BinaryVolume full = make_vol(6, 6, 6);
  std::fill(full.mask.begin(), full.mask.end(), std::uint8_t{1});
  CHECK(metrics::extract_surface(full).size() == 6 * 6 * 6 - 4 * 4 * 4);
}

TEST_CASE("hd95 oracle values") {
  BinaryVolume p = make_vol(8, 8, 8), g = make_vol(8, 8, 8);
  set_voxel(p, 1, 1, 1);
  set_voxel(g, 1, 1, 4);
  CHECK(metrics::hd95(p, g).value == 3.0);
  CHECK_FALSE(metrics::hd95(p, g).sentinel);

  BinaryVolume pa = make_vol(4, 8, 8, {10, 1, 1}), ga = make_vol(4, 8, 8, {10, 1, 1});
  set_voxel(pa, 1, 3, 3);
  set_voxel(ga, 2, 3, 3);
  CHECK(metrics::hd95(pa, ga).value == 10.0);

  CHECK(metrics::hd95(p, p).value == 0.0);
}

TEST_CASE("hd95 empty-mask policy") {
  BinaryVolume p = make_vol(4, 6, 8, {10, 1, 1}), g = make_vol(4, 6, 8, {10, 1, 1});
  CHECK(metrics::hd95(p, g).value == 0.0);
  CHECK_FALSE(metrics::hd95(p, g).sentinel);

  set_voxel(g, 0, 0, 0);
  const auto r = metrics::hd95(p, g);
  CHECK(r.sentinel);
  CHECK(r.value == std::sqrt(40.0 * 40.0 + 6.0 * 6.0 + 8.0 * 8.0));
  const auto rr = metrics::hd95(g, p);
  CHECK(rr.sentinel);
  CHECK(rr.value == r.value);
}

TEST_CASE("hd95 equals the brute-force oracle on random masks") {
  Rng rng(17);
  const std::array<double, 3> spacings[3] = {{1, 1, 1}, {10, 1, 1}, {2.5, 0.7, 1.3}};
  for (int t = 0; t < 200; ++t) {
    const std::int64_t d = 1 + static_cast<std::int64_t>(rng.uniform_int(16));
    const std::int64_t h = 1 + static_cast<std::int64_t>(rng.uniform_int(16));
    const std::int64_t w = 1 + static_cast<std::int64_t>(rng.uniform_int(16));
    const auto sp = spacings[t % 3];
    const BinaryVolume p = random_vol(d, h, w, rng, sp);
    const BinaryVolume g = random_vol(d, h, w, rng, sp);
    const auto r = metrics::hd95(p, g);
    CHECK_FALSE(r.sentinel);
    CHECK(r.value == oracle::hd95(p, g));
    CHECK(metrics::hd95(g, p).value == r.value);
    CHECK(metrics::dsc3d(p, g) == oracle::dsc(p, g));
  }
}

TEST_CASE("hd95 never increases as the smaller mask dilates toward the larger") {
  BinaryVolume g = make_vol(6, 10, 10);
  for (std::int64_t y = 2; y <= 7; ++y) {
    for (std::int64_t x = 2; x <= 7; ++x) set_voxel(g, 2, y, x);
  }
  double prev = std::numeric_limits<double>::infinity();
  // Nested squares growing toward the target footprint.
  for (std::int64_t r = 0; r <= 2; ++r) {
    BinaryVolume p = make_vol(6, 10, 10);
    for (std::int64_t y = 4 - r; y <= 5 + r; ++y) {
      for (std::int64_t x = 4 - r; x <= 5 + r; ++x) set_voxel(p, 2, y, x);
    }
    const double v = metrics::hd95(p, g).value;
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("evaluate_case matches per-class oracles") {
  Rng rng(23);
  data::DenseLabel pred, gt;
  pred.d = gt.d = 16;
  pred.h = gt.h = 16;
  pred.w = gt.w = 16;
  pred.labels.resize(16 * 16 * 16);
  gt.labels.resize(16 * 16 * 16);
  for (auto& v : pred.labels) v = static_cast<std::uint8_t>(rng.uniform_int(4));
  for (auto& v : gt.labels) v = static_cast<std::uint8_t>(rng.uniform_int(4));
  const std::array<double, 3> sp{10, 1, 1};

  const metrics::CaseMetrics cm = metrics::evaluate_case(pred, gt, sp, "case0");
  CHECK(cm.case_id == "case0");
  for (int cls = 1; cls <= 3; ++cls) {
    BinaryVolume bp = make_vol(16, 16, 16, sp), bg = make_vol(16, 16, 16, sp);
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
      bp.mask[i] = pred.labels[i] == cls;
      bg.mask[i] = gt.labels[i] == cls;
    }
    const auto& m = cm.structures[static_cast<std::size_t>(cls - 1)];
    CHECK(m.dsc == oracle::dsc(bp, bg));
    CHECK(m.hd95 == oracle::hd95(bp, bg));
    CHECK_FALSE(m.hd95_sentinel);
  }
  CHECK(cm.mean_dsc() ==
        doctest::Approx((cm.structures[0].dsc + cm.structures[1].dsc +
                         cm.structures[2].dsc) / 3.0).epsilon(1e-15));
}

TEST_CASE("evaluate_case flags an all-background prediction") {
  data::DenseLabel pred, gt;
  pred.d = gt.d = 4;
  pred.h = gt.h = 8;
  pred.w = gt.w = 8;
  pred.labels.assign(4 * 8 * 8, 0);
  gt.labels.assign(4 * 8 * 8, 0);
  gt.labels[0] = 1;
  gt.labels[1] = 2;
  gt.labels[2] = 3;

  const auto cm = metrics::evaluate_case(pred, gt, {10, 1, 1}, "deg");
  const double diag = std::sqrt(40.0 * 40.0 + 8.0 * 8.0 + 8.0 * 8.0);
  for (const auto& m : cm.structures) {
    CHECK(m.dsc == 0.0);
    CHECK(m.pred_empty);
    CHECK_FALSE(m.gt_empty);
    CHECK(m.hd95_sentinel);
    CHECK(m.hd95 == diag);
  }

  data::DenseLabel bad = pred;
  bad.labels[0] = 9;
  CHECK_THROWS_AS(metrics::evaluate_case(bad, gt, {1, 1, 1}), ValidationError);
}

TEST_CASE("aggregate oracle and two-pass equality") {
  metrics::CaseMetrics a, b;
  a.case_id = "a";
  b.case_id = "b";
  for (int i = 0; i < 3; ++i) {
    a.structures[static_cast<std::size_t>(i)] = {0.8, 4.0, false, false, false};
    b.structures[static_cast<std::size_t>(i)] = {0.9, 2.0, false, false, false};
  }
  const auto table = metrics::aggregate({a, b});
  CHECK(table.n_cases == 2);
  for (int col = 0; col < 4; ++col) {
    CHECK(table.dsc[static_cast<std::size_t>(col)].mean ==
          doctest::Approx(0.85).epsilon(1e-12));
    CHECK(table.dsc[static_cast<std::size_t>(col)].stddev ==
          doctest::Approx(0.05).epsilon(1e-12));
    CHECK(table.hd95[static_cast<std::size_t>(col)].mean ==
          doctest::Approx(3.0).epsilon(1e-12));
  }

  Rng rng(29);
  std::vector<metrics::CaseMetrics> cases;
  for (int i = 0; i < 9; ++i) {
    metrics::CaseMetrics c;
    c.case_id = std::to_string(i);
    for (auto& s : c.structures) {
      s.dsc = rng.uniform();
      s.hd95 = rng.uniform(0.0, 30.0);
    }
    cases.push_back(c);
  }
  const auto t = metrics::aggregate(cases);
  std::vector<double> rv, means;
  for (const auto& c : cases) {
    rv.push_back(c.structures[0].dsc);
    means.push_back(c.mean_dsc());
  }
  CHECK(std::fabs(t.dsc[0].mean - oracle::mean(rv)) < 1e-12);
  CHECK(std::fabs(t.dsc[0].stddev - oracle::population_std(rv)) < 1e-12);
  CHECK(std::fabs(t.dsc[3].mean - oracle::mean(means)) < 1e-12);
  CHECK(std::fabs(t.dsc[3].stddev - oracle::population_std(means)) < 1e-12);

  CHECK_THROWS_AS(metrics::aggregate({}), ValidationError);
}

TEST_CASE("paired test reproduces the exhaustive sign-flip example") {
  std::vector<double> a, b;
  for (int i = 0; i < 8; ++i) {
    b.push_back(0.5 + 0.01 * i);
    a.push_back(b.back() + 0.1);
  }
  const auto r = metrics::paired_test(a, b);
  CHECK(r.exhaustive);
  CHECK(r.p_value == 2.0 / 256.0);
  CHECK(r.statistic == std::numeric_limits<double>::infinity());

  const auto flipped = metrics::paired_test(b, a);
  CHECK(flipped.p_value == r.p_value);
  CHECK(flipped.statistic == -r.statistic);
}

TEST_CASE("paired test handles identical samples and antisymmetry") {
  const std::vector<double> a{0.4, 0.5, 0.6, 0.7};
  const auto same = metrics::paired_test(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  Rng rng(31);
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(rng.uniform());
    y.push_back(rng.uniform());
  }
  const auto fwd = metrics::paired_test(x, y);
  const auto rev = metrics::paired_test(y, x);
  CHECK(fwd.statistic == doctest::Approx(-rev.statistic).epsilon(1e-12));
  CHECK(fwd.p_value == rev.p_value);
  CHECK(fwd.exhaustive);
}

TEST_CASE("paired test exhaustive enumeration matches a direct oracle") {
  Rng rng(37);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> x, y, d;
    for (int i = 0; i < 6; ++i) {
      x.push_back(rng.uniform());
      y.push_back(rng.uniform());
      d.push_back(x.back() - y.back());
    }
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= 6.0;
    int hits = 0;
    for (int bits = 0; bits < 64; ++bits) {
      double s = 0.0;
      for (int i = 0; i < 6; ++i) s += (bits >> i) & 1 ? -d[static_cast<std::size_t>(i)] : d[static_cast<std::size_t>(i)];
      if (std::fabs(s / 6.0) >= std::fabs(mean)) ++hits;
    }
    CHECK(metrics::paired_test(x, y).p_value == static_cast<double>(hits) / 64.0);
  }
}

TEST_CASE("paired test falls back to seeded sampling for large n") {
  Rng rng(41);
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(rng.uniform());
    y.push_back(x.back() + rng.uniform(-0.05, 0.1));
  }
  const auto r1 = metrics::paired_test(x, y);
  const auto r2 = metrics::paired_test(x, y);
  CHECK_FALSE(r1.exhaustive);
  CHECK(r1.p_value == r2.p_value);  // seeded, not time-dependent
  CHECK(r1.p_value > 0.0);
  CHECK(r1.p_value <= 1.0);

  CHECK_THROWS_AS(metrics::paired_test({1.0}, {2.0}), ValidationError);
  CHECK_THROWS_AS(metrics::paired_test({1.0, 2.0}, {2.0}), ValidationError);
}
