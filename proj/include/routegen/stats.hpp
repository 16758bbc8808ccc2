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

#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <span>
#include <vector>

#include "routegen/core.hpp"

namespace routegen {

inline constexpr int kDefaultHistogramBins = 64;

/// Per-instance structural features.
struct StructuralStats {
  double fft_energy = 0.0;
  double nn_ratio = 0.0;
  Index n = 0;
  int bins = kDefaultHistogramBins;
};

struct SegmentThresholds {
  double fft_threshold;
  double nn_threshold;

  void check() const;

  /// Thresholds fitted by `calibrate_thresholds` on seed-program samples for
  /// the probability-normalized 64x64 density map (see README).
  static SegmentThresholds calibrated();
  /// FFT=35 / NN=0.5, the published values. The FFT value belongs to an
  /// unnormalized histogram scaling and does not transfer to ours.
  static SegmentThresholds reference();
};

/// bins x bins histogram of points in [0,1]^2, normalized to unit mass. Row
/// index follows x, column index follows y; coordinates equal to 1 fall in
/// the last bin.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
density_map(const Eigen::MatrixBase<Derived>& points, int bins) {
  using Scalar = typename Derived::Scalar;
  if (bins < 2) throw Error(Errc::kInvalidArgument, "density_map needs bins >= 2");
  if (points.rows() < 1) throw Error(Errc::kInvalidArgument, "density_map needs points");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grid =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(bins, bins);
  auto cell = [bins](Scalar v) {
    const auto c = static_cast<long>(std::floor(v * static_cast<Scalar>(bins)));
    return static_cast<Index>(std::clamp<long>(c, 0, bins - 1));
  };
  for (Index i = 0; i < points.rows(); ++i) {
    grid(cell(points(i, 0)), cell(points(i, 1))) += Scalar(1);
  }
  grid /= static_cast<Scalar>(points.rows());
  return grid;
}

/// Full 2-D DFT, unnormalized: F(u,v) = sum_{x,y} g(x,y) e^{-2 pi i (ux/R + vy/C)}.
template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::Scalar>, Eigen::Dynamic, Eigen::Dynamic>
dft2(const Eigen::MatrixBase<Derived>& grid) {
  using Scalar = typename Derived::Scalar;
  using Complex = std::complex<Scalar>;
  const Index rows = grid.rows(), cols = grid.cols();
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  Eigen::FFT<Scalar> fft;
  std::vector<Scalar> real_in(static_cast<std::size_t>(cols));
  std::vector<Complex> line_out;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) real_in[static_cast<std::size_t>(c)] = grid(r, c);
    fft.fwd(line_out, real_in);
    for (Index c = 0; c < cols; ++c) out(r, c) = line_out[static_cast<std::size_t>(c)];
  }
  std::vector<Complex> col_in(static_cast<std::size_t>(rows));
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) col_in[static_cast<std::size_t>(r)] = out(r, c);
    fft.fwd(line_out, col_in);
    for (Index r = 0; r < rows; ++r) out(r, c) = line_out[static_cast<std::size_t>(r)];
  }
  return out;
}

/// Mean of |F(u,v)|^2 over every frequency except the DC term.
template <typename Derived>
typename Derived::Scalar fft_energy(const Eigen::MatrixBase<Derived>& density) {
  using Scalar = typename Derived::Scalar;
  const Index count = density.rows() * density.cols();
  if (count < 2) throw Error(Errc::kInvalidArgument, "fft_energy needs >= 2 bins");
  const auto spectrum = dft2(density);
  const Scalar total = spectrum.cwiseAbs2().sum() - std::norm(spectrum(0, 0));
  return std::max(Scalar(0), total / static_cast<Scalar>(count - 1));
}

/// Nearest-neighbour distance of every point, self excluded. Brute force.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> nearest_neighbor_distances(
    const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> best =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(n, std::numeric_limits<Scalar>::infinity());
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Scalar dx = points(i, 0) - points(j, 0);
      const Scalar dy = points(i, 1) - points(j, 1);
      const Scalar d2 = dx * dx + dy * dy;
      if (d2 < best(i)) best(i) = d2;
      if (d2 < best(j)) best(j) = d2;
    }
  }
  return best.cwiseSqrt();
}

/// Coefficient of variation (population std / mean) of nearest-neighbour
/// distances.
template <typename Derived>
typename Derived::Scalar nn_ratio(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  if (points.rows() < 2) throw Error(Errc::kDegenerateInput, "nn_ratio needs n >= 2");
  const auto d = nearest_neighbor_distances(points);
  if (d.minCoeff() <= Scalar(0)) {
    throw Error(Errc::kDegenerateInput, "coincident points (zero nearest-neighbour distance)");
  }
  const Scalar mean = d.mean();
  const Scalar var = (d.array() - mean).square().mean();
  return std::sqrt(var) / mean;
}

/// Stats of a point set already normalized to [0,1]^2.
StructuralStats compute_stats(const PointSet2d& normalized, int bins = kDefaultHistogramBins);

/// Normalizes the instance coordinates, then computes stats over all nodes.
StructuralStats instance_stats(const Instance& instance, int bins = kDefaultHistogramBins);

/// S1 when fft_energy >= fft_threshold; otherwise S2 when nn_ratio <
/// nn_threshold, else S3.
SegmentLabel classify(const StructuralStats& stats, const SegmentThresholds& thresholds);

struct LabeledStats {
  StructuralStats stats;
  SegmentLabel label;
};

/// Fits both thresholds by minimizing misclassification on labeled samples:
/// FFT on S1 vs {S2, S3}, then NN-ratio on S2 vs S3. Among equally good
/// cut points the midpoint of the widest gap wins.
SegmentThresholds calibrate_thresholds(std::span<const LabeledStats> samples);

/// Misclassification-minimizing cut between `low` (expected below) and
/// `high` (expected at or above). Exposed for tests.
double fit_threshold(std::vector<double> low, std::vector<double> high);

}  // namespace routegen
