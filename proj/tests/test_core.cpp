// Copyright 2026 The routegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "routegen/core.hpp"
#include "routegen/random.hpp"

namespace routegen {
namespace {

TEST(Normalize, HandCase) {
  PointSet2d p(2, 2);
  p << 0, 0, 2, 1;
  const auto [out, rec] = normalize_coords(p);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(0, 1), 0.0);
  EXPECT_EQ(out(1, 0), 1.0);
  EXPECT_EQ(out(1, 1), 0.5);
  EXPECT_EQ(rec.max_diff, 2.0);
  EXPECT_EQ(rec.min_val, Point2d(0, 0));
}

TEST(Normalize, RangeAndUniformScale) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.index(60));
    PointSet2d p(n, 2);
    const double scale = std::exp(rng.uniform(-5, 8));
    for (Index i = 0; i < n; ++i) p.row(i) << rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale;
    const auto [q, rec] = normalize_coords(p);
    EXPECT_GE(q.minCoeff(), 0.0);
    EXPECT_LE(q.maxCoeff(), 1.0);
    EXPECT_NEAR(q.colwise().maxCoeff().maxCoeff(), 1.0, 1e-12);
    const Index a = static_cast<Index>(rng.index(n)), b = static_cast<Index>(rng.index(n));
    EXPECT_NEAR(node_distance(q, a, b) * rec.max_diff, node_distance(p, a, b), 1e-9 * scale);
  }
}

TEST(Normalize, FloatScalar) {
  PointSet<float> p(3, 2);
  p << 1, 1, 3, 1, 2, 5;
  const auto [q, rec] = normalize_coords(p);
  EXPECT_FLOAT_EQ(q(2, 1), 1.0f);
  EXPECT_FLOAT_EQ(rec.max_diff, 4.0f);
}

TEST(Normalize, DegenerateInputs) {
  PointSet2d same(3, 2);
  same << 1, 1, 1, 1, 1, 1;
  try {
    normalize_coords(same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDegenerateInput);
  }
  PointSet2d empty(0, 2);
  EXPECT_THROW(normalize_coords(empty), Error);
}

TEST(Capacity, HandCase) {
  const std::vector<std::int64_t> d = {1, 2, 3, 10};
  EXPECT_EQ(compute_capacity(d, 6.0, CvrpParams{}), 24.0);
  // The max-demand term wins for a small ratio: max(ceil(3 * 4), 2 * 10) = 20.
  EXPECT_EQ(compute_capacity(d, 3.0, CvrpParams{}), 20.0);
  // ceil(4.5 * 4) = 18 exactly, without floating rounding drift.
  const std::vector<std::int64_t> e = {4, 4, 4, 4};
  EXPECT_EQ(compute_capacity(e, 4.5, CvrpParams{}), 18.0);
}

TEST(Capacity, ExactCeilProduct) {
  EXPECT_EQ(exact_ceil_product(6.0, 16, 4), 24);
  EXPECT_EQ(exact_ceil_product(0.25, 12, 1), 3);
  EXPECT_EQ(exact_ceil_product(0.25, 13, 1), 4);
  EXPECT_EQ(exact_ceil_product(2.5, 3, 2), 4);   // 3.75 -> 4
  EXPECT_EQ(exact_ceil_product(1.0, 7, 7), 1);
}

TEST(Capacity, TriangularMean) {
  Rng rng(3);
  const CvrpParams params;
  double sum = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double r = sample_capacity_ratio(params, rng);
    ASSERT_GE(r, 3.0);
    ASSERT_LE(r, 25.0);
    sum += r;
  }
  EXPECT_NEAR(sum / draws, 34.0 / 3.0, 0.2);
}

TEST(Capacity, DemandRange) {
  const auto d = sample_demands(5000, CvrpParams{}, 9);
  std::vector<int> hist(11, 0);
  for (auto v : d) {
    ASSERT_GE(v, 1);
    ASSERT_LE(v, 10);
    ++hist[static_cast<std::size_t>(v)];
  }
  for (int v = 1; v <= 10; ++v) EXPECT_GT(hist[static_cast<std::size_t>(v)], 350);
  EXPECT_EQ(d, sample_demands(5000, CvrpParams{}, 9));
}

TEST(Capacity, ParamCheck) {
  CvrpParams bad;
  bad.r_mode = 30;
  EXPECT_THROW(bad.check(), Error);
  bad = {};
  bad.demand_low = 0;
  EXPECT_THROW(bad.check(), Error);
}

Instance small_cvrp() {
  Instance inst;
  inst.name = "tiny";
  inst.kind = ProblemKind::kCvrp;
  inst.nodes.resize(3, 2);
  inst.nodes << 0, 0, 4, 0, 0, 2;
  inst.depot_index = 0;
  Eigen::VectorXd d(3);
  d << 0, 3, 5;
  inst.demands = d;
  inst.capacity = 10;
  return inst;
}

TEST(InstanceModel, Check) {
  Instance inst = small_cvrp();
  EXPECT_NO_THROW(inst.check());
  inst.capacity.reset();
  EXPECT_THROW(inst.check(), Error);
  inst = small_cvrp();
  inst.demands->resize(2);
  EXPECT_THROW(inst.check(), Error);
}

TEST(InstanceModel, NormalizeDemandsAndCoords) {
  const Instance n = normalize_demands(normalize_instance(small_cvrp()));
  EXPECT_DOUBLE_EQ(n.nodes(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(n.nodes(2, 1), 0.5);
  EXPECT_DOUBLE_EQ((*n.demands)(1), 0.3);
  EXPECT_DOUBLE_EQ((*n.demands)(2), 0.5);
  EXPECT_EQ(*n.capacity, 1.0);
  Instance tsp;
  tsp.nodes = small_cvrp().nodes;
  EXPECT_THROW(normalize_demands(tsp), Error);
}

TEST(Labels, RoundTrip) {
  for (auto l : {SegmentLabel::kS1, SegmentLabel::kS2, SegmentLabel::kS3}) {
    EXPECT_EQ(parse_segment_label(to_string(l)), l);
  }
  EXPECT_EQ(parse_problem_kind("CVRP"), ProblemKind::kCvrp);
  EXPECT_THROW(parse_segment_label("S4"), Error);
}

TEST(Random, DeterministicStreams) {
  Rng a(5, 1), b(5, 1), c(5, 2);
  EXPECT_EQ(a(), b());
  EXPECT_NE(Rng(5, 1)(), c());
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  Rng(8).shuffle(std::span<int>(v));
  Rng(8).shuffle(std::span<int>(w));
  EXPECT_EQ(v, w);
}

}  // namespace
}  // namespace routegen
