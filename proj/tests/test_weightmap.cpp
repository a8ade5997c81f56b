#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "unet/rng.hpp"
#include "unet/weightmap.hpp"

namespace unet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// O(P^2) oracle: nearest and second-nearest distinct instance distances.
DistanceMaps brute_distances(const InstanceMap& m) {
  DistanceMaps out{Raster<double>(m.height, m.width, kInf), Raster<double>(m.height, m.width, kInf)};
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x) {
      std::map<std::uint32_t, double> nearest;
      for (std::size_t v = 0; v < m.height; ++v)
        for (std::size_t u = 0; u < m.width; ++u) {
          const std::uint32_t id = m(v, u);
          if (id == 0 || id == kUnannotated) continue;
          const double dy = double(y) - double(v), dx = double(x) - double(u);
          const double d2 = dy * dy + dx * dx;
          auto it = nearest.find(id);
          if (it == nearest.end() || d2 < it->second) nearest[id] = d2;
        }
      std::vector<double> ds;
      for (const auto& [id, d] : nearest) ds.push_back(d);
      std::sort(ds.begin(), ds.end());
      if (ds.size() > 0) out.d1(y, x) = std::sqrt(ds[0]);
      if (ds.size() > 1) out.d2(y, x) = std::sqrt(ds[1]);
    }
  return out;
}

InstanceMap random_instances(std::size_t h, std::size_t w, std::size_t max_instances, Rng& rng) {
  InstanceMap m(h, w);
  const std::size_t count = rng.below(max_instances + 1);
  for (std::uint32_t id = 1; id <= count; ++id) {
    const double cy = rng.uniform(0, double(h)), cx = rng.uniform(0, double(w));
    const double ry = rng.uniform(1, 6), rx = rng.uniform(1, 6);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double a = (double(y) - cy) / ry, b = (double(x) - cx) / rx;
        if (a * a + b * b <= 1.0) m(y, x) = id;
      }
  }
  return m;
}

TEST(ClassBalance, Examples) {
  ClassMap half(2, 2, std::vector<std::uint8_t>{0, 1, 0, 1});
  EXPECT_EQ(class_balance_weights(half, 2), (std::vector<double>{1.0, 1.0}));

  ClassMap skewed(10, 10);
  for (std::size_t i = 0; i < 10; ++i) skewed.data[i] = 1;
  const auto w = class_balance_weights(skewed, 2);
  EXPECT_NEAR(w[0], 0.5556, 5e-5);
  EXPECT_NEAR(w[1], 5.0, 1e-12);

  EXPECT_EQ(class_balance_weights(ClassMap(4, 4, 1), 2), (std::vector<double>{0.0, 1.0}));
}

TEST(ClassBalance, SkipsUnannotatedAndRejectsBadLabels) {
  ClassMap labels(1, 4, std::vector<std::uint8_t>{0, 0, 0, 1});
  Mask annotated(1, 4, std::vector<std::uint8_t>{0, 0, 1, 1});
  EXPECT_EQ(class_balance_weights(labels, 2, &annotated), (std::vector<double>{1.0, 1.0}));
  EXPECT_THROW(class_balance_weights(ClassMap(1, 1, 2), 2), PreconditionError);
}

TEST(SeparationBorder, Examples) {
  InstanceMap single(5, 5);
  single(2, 2) = 1;
  single(2, 3) = 1;
  const auto a = separation_border(single, 2);
  for (auto v : a.border.data) EXPECT_EQ(v, 0);

  InstanceMap pair(1, 3, std::vector<std::uint32_t>{1, 0, 2});
  const auto b = separation_border(pair, 1);
  EXPECT_EQ(b.border(0, 1), 1);
  EXPECT_EQ(b.classes(0, 1), 0);
  EXPECT_EQ(b.classes(0, 0), 1);

  InstanceMap far(1, 10);
  far(0, 0) = 1;
  far(0, 9) = 2;
  for (auto v : separation_border(far, 2).border.data) EXPECT_EQ(v, 0);
  EXPECT_THROW(separation_border(far, 0), PreconditionError);
}

TEST(SeparationBorder, InvariantUnderIdPermutation) {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const InstanceMap m = random_instances(24, 24, 4, rng);
    InstanceMap permuted = m;
    for (auto& id : permuted.data)
      if (id) id = 50 - id;
    const auto a = separation_border(m, 2), b = separation_border(permuted, 2);
    EXPECT_EQ(a.border, b.border);
    EXPECT_EQ(a.classes, b.classes);
  }
}

TEST(SeparationBorder, MatchesChebyshevNeighbourhoodOracle) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const InstanceMap m = random_instances(20, 20, 4, rng);
    const auto b = separation_border(m, 2);
    for (std::size_t y = 0; y < 20; ++y)
      for (std::size_t x = 0; x < 20; ++x) {
        std::set<std::uint32_t> seen;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) {
            const long yy = long(y) + dy, xx = long(x) + dx;
            if (yy < 0 || xx < 0 || yy >= 20 || xx >= 20) continue;
            if (m(yy, xx)) seen.insert(m(yy, xx));
          }
        EXPECT_EQ(b.border(y, x), m(y, x) == 0 && seen.size() >= 2) << y << "," << x;
      }
  }
}

TEST(DistanceMaps, Examples) {
  // Instance A at column 0, B at column 3; pixel (0,1) is adjacent to A and two from B.
  InstanceMap m(1, 4, std::vector<std::uint32_t>{1, 0, 0, 2});
  const auto d = distance_maps(m);
  EXPECT_EQ(d.d1(0, 1), 1.0);
  EXPECT_EQ(d.d2(0, 1), 2.0);

  InstanceMap only(3, 3);
  only(1, 1) = 4;
  const auto e = distance_maps(only);
  EXPECT_EQ(e.d1(1, 1), 0.0);
  EXPECT_EQ(e.d2(1, 1), kInf);

  const auto empty = distance_maps(InstanceMap(4, 5));
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(empty.d1.data[i], kInf);
    EXPECT_EQ(empty.d2.data[i], kInf);
  }
}

TEST(DistanceMaps, ExactlyMatchesBruteForce) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const std::size_t h = 8 + rng.below(25), w = 8 + rng.below(25);
    const InstanceMap m = random_instances(h, w, 4, rng);
    const auto fast = distance_maps(m), slow = brute_distances(m);
    EXPECT_EQ(fast.d1, slow.d1) << "trial " << t;
    EXPECT_EQ(fast.d2, slow.d2) << "trial " << t;
  }
}

TEST(GapWeight, Examples) {
  const WeightMapParams p;
  EXPECT_EQ(gap_weight(0.7, 0.0, 0.0, p), 0.7 + 10.0);
  EXPECT_NEAR(gap_weight(0.7, 4.0, 6.0, p), 0.7 + 10.0 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(gap_weight(0.7, 4.0, 6.0, p) - 0.7, 1.3534, 5e-5);
  // 10 exp(-s^2 / 50) drops below 1e-6 at s = sqrt(50 ln 1e7) = 28.388.
  EXPECT_LT(gap_weight(0.0, 14.2, 14.2, p), 1e-6);
  EXPECT_GT(gap_weight(0.0, 14.19, 14.19, p), 1e-6);
  EXPECT_EQ(gap_weight(1.0, 0.0, kInf, p), 1.0);
}

TEST(WeightMap, MatchesDirectEvaluation) {
  Rng rng(8);
  const WeightMapParams p;
  for (int t = 0; t < 20; ++t) {
    const InstanceMap m = random_instances(32, 32, 4, rng);
    const WeightMap w = weight_map(m, p);
    const auto d = brute_distances(m);
    const auto border = separation_border(m, p.border_radius);
    std::size_t counts[2] = {0, 0};
    for (auto c : border.classes.data) ++counts[c];
    const double present = (counts[0] > 0) + (counts[1] > 0);
    double min_wc = kInf;
    for (int c = 0; c < 2; ++c)
      if (counts[c]) min_wc = std::min(min_wc, 1024.0 / (present * counts[c]));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double wc = 1024.0 / (present * counts[border.classes.data[i]]);
      const double s = d.d1.data[i] + d.d2.data[i];
      EXPECT_NEAR(w.data[i], wc + 10.0 * std::exp(-s * s / 50.0), 1e-9);
      EXPECT_GE(w.data[i], min_wc);
    }
  }
}

TEST(WeightMap, GaussianTermPeaksWhereGapIsNarrowest) {
  Rng rng(9);
  const WeightMapParams p;
  for (int t = 0; t < 10; ++t) {
    const InstanceMap m = random_instances(32, 32, 4, rng);
    const auto d = distance_maps(m);
    const auto w = weight_map(m, p);
    const auto classes = separation_border(m, p.border_radius).classes;
    const auto wc = class_balance_weights(classes, 2);
    double best_sum = kInf, best_term = 0;
    for (std::size_t i = 0; i < w.size(); ++i) best_sum = std::min(best_sum, d.d1.data[i] + d.d2.data[i]);
    if (!std::isfinite(best_sum)) continue;
    for (std::size_t i = 0; i < w.size(); ++i) best_term = std::max(best_term, w.data[i] - wc[classes.data[i]]);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double term = w.data[i] - wc[classes.data[i]];
      if (d.d1.data[i] + d.d2.data[i] == best_sum) EXPECT_NEAR(term, best_term, 1e-12);
      else EXPECT_LT(term, best_term - 1e-12);
    }
  }
}

TEST(WeightMap, UnannotatedPixelsGetZero) {
  InstanceMap m(6, 6);
  m(1, 1) = 1;
  m(4, 4) = 2;
  for (std::size_t x = 0; x < 6; ++x) m(0, x) = kUnannotated;
  const WeightMap w = weight_map(m, {});
  for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(w(0, x), 0.0);
  for (std::size_t i = 6; i < w.size(); ++i) EXPECT_GT(w.data[i], 0.0);
}

TEST(WeightMap, RejectsBadParams) {
  EXPECT_THROW(weight_map(InstanceMap(2, 2), {0.0, 5.0, 2}), PreconditionError);
  EXPECT_THROW(weight_map(InstanceMap(2, 2), {10.0, -1.0, 2}), PreconditionError);
}

TEST(WeightMap, FixedPointExport) {
  EXPECT_EQ(weight_to_byte(0.0), 0);
  EXPECT_EQ(weight_to_byte(1.04), 10);
  EXPECT_EQ(weight_to_byte(10.96), 110);
  EXPECT_EQ(weight_to_byte(25.5), 255);
  EXPECT_EQ(weight_to_byte(99.0), 255);
}

TEST(Canonicalize, RenumbersInFirstAppearanceOrder) {
  InstanceMap m(1, 6, std::vector<std::uint32_t>{0, 9, 9, 3, kUnannotated, 7});
  EXPECT_EQ(canonicalize(m).data, (std::vector<std::uint32_t>{0, 1, 1, 2, kUnannotated, 3}));
}

}  // namespace
}  // namespace unet
