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

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "routegen/error.hpp"
#include "routegen/random.hpp"

namespace routegen {

using Index = Eigen::Index;

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// n x 2 coordinate block, one node per row.
template <typename Scalar>
using PointSet = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

using Point2d = Point2<double>;
using PointSet2d = PointSet<double>;

enum class ProblemKind { kTsp, kCvrp };

/// Structural segment of an instance: repeated motifs, grid-like or weakly
/// clustered, locally aggregated.
enum class SegmentLabel { kS1, kS2, kS3 };

std::string_view to_string(ProblemKind kind);
std::string_view to_string(SegmentLabel label);
ProblemKind parse_problem_kind(std::string_view text);
SegmentLabel parse_segment_label(std::string_view text);

/// A routing instance. TSP instances carry only coordinates; CVRP instances
/// additionally carry exactly one depot, per-node demands (depot demand 0)
/// and a vehicle capacity.
struct Instance {
  std::string name;
  PointSet2d nodes;
  ProblemKind kind = ProblemKind::kTsp;
  std::optional<Index> depot_index;
  std::optional<Eigen::VectorXd> demands;
  std::optional<double> capacity;
  std::optional<double> best_known;

  Index size() const noexcept { return nodes.rows(); }
  bool is_cvrp() const noexcept { return kind == ProblemKind::kCvrp; }

  /// Throws kInvalidArgument when a structural invariant is violated.
  void check() const;
};

template <typename Scalar>
struct NormalizationRecord {
  Point2<Scalar> min_val;
  Scalar max_diff;
};

/// Translates by the per-axis minimum and divides by the largest axis extent.
/// The scale is isotropic, so distance ratios are preserved.
template <typename Derived>
std::pair<PointSet<typename Derived::Scalar>,
          NormalizationRecord<typename Derived::Scalar>>
normalize_coords(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::ColsAtCompileTime == 2 ||
                    Derived::ColsAtCompileTime == Eigen::Dynamic,
                "points must be n x 2");
  if (points.rows() < 1 || points.cols() != 2) {
    throw Error(Errc::kDegenerateInput, "normalize_coords needs n x 2 input");
  }
  const Point2<Scalar> min_val = points.colwise().minCoeff().transpose();
  const Point2<Scalar> max_val = points.colwise().maxCoeff().transpose();
  const Scalar max_diff = (max_val - min_val).maxCoeff();
  if (!(max_diff > Scalar(0)) || !std::isfinite(max_diff)) {
    throw Error(Errc::kDegenerateInput, "all points coincide (max_diff = 0)");
  }
  PointSet<Scalar> out =
      (points.rowwise() - min_val.transpose()) / max_diff;
  return {std::move(out), NormalizationRecord<Scalar>{min_val, max_diff}};
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean_distance(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const auto dx = a(0) - b(0);
  const auto dy = a(1) - b(1);
  return std::sqrt(dx * dx + dy * dy);
}

inline double node_distance(const PointSet2d& nodes, Index i, Index j) {
  const double dx = nodes(i, 0) - nodes(j, 0);
  const double dy = nodes(i, 1) - nodes(j, 1);
  return std::sqrt(dx * dx + dy * dy);
}

/// Demand and capacity model for synthetic CVRP instances.
struct CvrpParams {
  std::int64_t demand_low = 1;
  std::int64_t demand_high = 10;
  double r_min = 3.0;
  double r_mode = 6.0;
  double r_max = 25.0;
  double k = 2.0;

  void check() const;
};

/// n integer demands, discrete-uniform on [demand_low, demand_high].
std::vector<std::int64_t> sample_demands(Index n, const CvrpParams& params,
                                         std::uint64_t seed);
std::vector<std::int64_t> sample_demands(Index n, const CvrpParams& params,
                                         Rng& rng);

/// Draws the capacity multiplier r ~ Triangular(r_min, r_mode, r_max).
double sample_capacity_ratio(const CvrpParams& params, Rng& rng);

/// max(ceil(r * mean(demands)), ceil(k * max(demands))), with both ceilings
/// evaluated exactly on the binary value of the real operands.
double compute_capacity(std::span<const std::int64_t> demands, double r,
                        const CvrpParams& params);

/// ceil(num * x / den) computed exactly for finite non-negative x.
std::int64_t exact_ceil_product(double x, std::int64_t num, std::int64_t den);

/// Divides every demand by the capacity and sets the capacity to 1.
Instance normalize_demands(const Instance& instance);

/// Applies coordinate normalization to the instance nodes.
Instance normalize_instance(const Instance& instance);

}  // namespace routegen
