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
#include <complex>
#include <numbers>

#include "routegen/random.hpp"
#include "routegen/stats.hpp"

namespace routegen {
namespace {

using Grid = Eigen::MatrixXd;

/// Direct O(B^4) evaluation of the 2-D DFT.
Eigen::MatrixXcd brute_dft(const Grid& g) {
  const Index r = g.rows(), c = g.cols();
  Eigen::MatrixXcd out(r, c);
  for (Index u = 0; u < r; ++u) {
    for (Index v = 0; v < c; ++v) {
      std::complex<double> acc = 0;
      for (Index x = 0; x < r; ++x) {
        for (Index y = 0; y < c; ++y) {
          const double angle = -2.0 * std::numbers::pi *
                               (static_cast<double>(u * x) / r + static_cast<double>(v * y) / c);
          acc += g(x, y) * std::polar(1.0, angle);
        }
      }
      out(u, v) = acc;
    }
  }
  return out;
}

double brute_energy(const Grid& g) {
  const auto f = brute_dft(g);
  double total = 0;
  for (Index u = 0; u < f.rows(); ++u)
    for (Index v = 0; v < f.cols(); ++v)
      if (u != 0 || v != 0) total += std::norm(f(u, v));
  return total / static_cast<double>(f.size() - 1);
}

TEST(Dft, MatchesBruteForceOnRandomGrids) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    Grid g(16, 16);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
    g /= g.sum();
    const auto fast = dft2(g);
    const auto slow = brute_dft(g);
    EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(fft_energy(g), brute_energy(g), 1e-9);
  }
}

TEST(Dft, NonSquareGrid) {
  Rng rng(4);
  Grid g(6, 10);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
  EXPECT_LT((dft2(g) - brute_dft(g)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FftEnergy, Anchors) {
  const Grid uniform = Grid::Constant(64, 64, 1.0 / 4096.0);
  EXPECT_NEAR(fft_energy(uniform), 0.0, 1e-9);
  Grid delta = Grid::Zero(64, 64);
  delta(17, 40) = 1.0;
  EXPECT_NEAR(fft_energy(delta), 1.0, 1e-9);
}

TEST(FftEnergy, ParsevalClosedForm) {
  // Mean non-DC power equals (B^2 * sum p^2 - 1) / (B^2 - 1) for unit mass.
  Rng rng(9);
  Grid g(32, 32);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform() < 0.1 ? rng.uniform() : 0.0;
  g /= g.sum();
  const double b2 = 32.0 * 32.0;
  EXPECT_NEAR(fft_energy(g), (b2 * g.squaredNorm() - 1.0) / (b2 - 1.0), 1e-12);
}

TEST(DensityMap, BinningAndMass) {
  PointSet2d p(4, 2);
  p << 0.0, 0.0, 1.0, 1.0, 0.5, 0.25, 0.999, 0.0;
  const Grid d = density_map(p, 4);
  EXPECT_DOUBLE_EQ(d.sum(), 1.0);
  EXPECT_DOUBLE_EQ(d(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(d(3, 3), 0.25);  // coordinate 1 falls in the last bin
  EXPECT_DOUBLE_EQ(d(2, 1), 0.25);
  EXPECT_DOUBLE_EQ(d(3, 0), 0.25);
  EXPECT_THROW(density_map(p, 1), Error);
}

TEST(NnRatio, Anchors) {
  PointSet2d grid(16, 2);
  for (int i = 0; i < 16; ++i) grid.row(i) << i % 4, i / 4;
  EXPECT_EQ(nn_ratio(grid), 0.0);

  PointSet2d line(3, 2);
  line << 0, 0, 1, 0, 3, 0;
  // Distances {1, 1, 2}: mean 4/3, population std sqrt(2)/3.
  EXPECT_NEAR(nn_ratio(line), 0.35355, 1e-5);
  EXPECT_NEAR(nn_ratio(line), std::sqrt(2.0) / 4.0, 1e-15);
}

TEST(NnRatio, Errors) {
  PointSet2d one(1, 2);
  one << 0.5, 0.5;
  EXPECT_THROW(nn_ratio(one), Error);
  PointSet2d dup(3, 2);
  dup << 0, 0, 0, 0, 1, 1;
  try {
    nn_ratio(dup);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDegenerateInput);
  }
}

TEST(NnRatio, ScaleInvariant) {
  Rng rng(2);
  PointSet2d p(50, 2);
  for (Index i = 0; i < 50; ++i) p.row(i) << rng.uniform(), rng.uniform();
  EXPECT_NEAR(nn_ratio(p), nn_ratio(PointSet2d(p * 37.5)), 1e-12);
}

TEST(Classify, RuleAndTies) {
  const SegmentThresholds t{0.02, 0.5};
  StructuralStats s;
  s.fft_energy = 0.02;
  s.nn_ratio = 3.0;
  EXPECT_EQ(classify(s, t), SegmentLabel::kS1);  // >= goes to S1
  s.fft_energy = 0.019;
  s.nn_ratio = 0.5;
  EXPECT_EQ(classify(s, t), SegmentLabel::kS3);  // NN-ratio tie is not below the cut
  s.nn_ratio = 0.4999;
  EXPECT_EQ(classify(s, t), SegmentLabel::kS2);
}

TEST(Thresholds, Defaults) {
  EXPECT_EQ(SegmentThresholds::reference().fft_threshold, 35.0);
  EXPECT_EQ(SegmentThresholds::reference().nn_threshold, 0.5);
  EXPECT_EQ(SegmentThresholds::calibrated().nn_threshold, 0.5);
  EXPECT_GT(SegmentThresholds::calibrated().fft_threshold, 0.0);
  EXPECT_THROW((SegmentThresholds{0.0, 0.5}.check()), Error);
}

TEST(Thresholds, FitSeparable) {
  // Widest gap midpoint among zero-error cuts.
  EXPECT_DOUBLE_EQ(fit_threshold({0.1, 0.2, 0.3}, {0.9, 1.0}), 0.6);
}

TEST(Thresholds, FitOverlapping) {
  // Cut 0.5 misclassifies one sample (0.6); every other cut does worse.
  const double t = fit_threshold({0.1, 0.2, 0.6}, {0.5, 0.7, 0.8});
  EXPECT_GT(t, 0.2);
  EXPECT_LE(t, 0.5);
  EXPECT_THROW(fit_threshold({}, {1.0}), Error);
}

TEST(Thresholds, CalibrateFromLabeled) {
  std::vector<LabeledStats> samples;
  auto add = [&](double fft, double nn, SegmentLabel l) {
    StructuralStats s;
    s.fft_energy = fft;
    s.nn_ratio = nn;
    samples.push_back({s, l});
  };
  add(0.05, 0.1, SegmentLabel::kS1);
  add(0.04, 0.0, SegmentLabel::kS1);
  add(0.01, 0.05, SegmentLabel::kS2);
  add(0.012, 0.08, SegmentLabel::kS2);
  add(0.011, 1.2, SegmentLabel::kS3);
  add(0.014, 0.9, SegmentLabel::kS3);
  const auto t = calibrate_thresholds(samples);
  EXPECT_DOUBLE_EQ(t.fft_threshold, 0.027);
  EXPECT_DOUBLE_EQ(t.nn_threshold, 0.49);
  for (const auto& s : samples) EXPECT_EQ(classify(s.stats, t), s.label);
}

TEST(Stats, InstanceStatsNormalizes) {
  Instance inst;
  inst.nodes.resize(4, 2);
  inst.nodes << 10, 10, 30, 10, 10, 30, 30, 30;
  const auto s = instance_stats(inst);
  EXPECT_EQ(s.n, 4);
  EXPECT_EQ(s.nn_ratio, 0.0);
  Instance scaled = inst;
  scaled.nodes *= 1000.0;
  EXPECT_NEAR(instance_stats(scaled).fft_energy, s.fft_energy, 1e-15);
}

}  // namespace
}  // namespace routegen
