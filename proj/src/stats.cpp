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

#include "routegen/stats.hpp"

#include <cmath>
#include <limits>

namespace routegen {

void SegmentThresholds::check() const {
  if (!(fft_threshold > 0.0) || !(nn_threshold > 0.0)) {
    throw Error(Errc::kInvalidArgument, "segment thresholds must be positive");
  }
}

SegmentThresholds SegmentThresholds::calibrated() {
  // FFT cut from `routegen calibrate-thresholds --from-seeds 200 --seed 7 -n 100`.
  // That run puts the NN-ratio cut at 0.421; 0.5 lies in the same empty gap.
  return {0.023661636141636178, 0.5};
}

SegmentThresholds SegmentThresholds::reference() { return {35.0, 0.5}; }

StructuralStats compute_stats(const PointSet2d& normalized, int bins) {
  StructuralStats s;
  s.n = normalized.rows();
  s.bins = bins;
  s.fft_energy = fft_energy(density_map(normalized, bins));
  s.nn_ratio = nn_ratio(normalized);
  return s;
}

StructuralStats instance_stats(const Instance& instance, int bins) {
  return compute_stats(normalize_coords(instance.nodes).first, bins);
}

SegmentLabel classify(const StructuralStats& stats, const SegmentThresholds& thresholds) {
  if (stats.fft_energy >= thresholds.fft_threshold) return SegmentLabel::kS1;
  if (stats.nn_ratio < thresholds.nn_threshold) return SegmentLabel::kS2;
  return SegmentLabel::kS3;
}

double fit_threshold(std::vector<double> low, std::vector<double> high) {
  if (low.empty() || high.empty()) {
    throw Error(Errc::kInvalidArgument, "fit_threshold needs samples on both sides");
  }
  std::vector<std::pair<double, bool>> all;  // (value, is_high)
  for (double v : low) all.emplace_back(v, false);
  for (double v : high) all.emplace_back(v, true);
  std::sort(all.begin(), all.end());

  // Sweep cut points between consecutive distinct values. errors(t) counts
  // low >= t plus high < t.
  std::size_t low_above = low.size();
  std::size_t high_below = 0;
  std::size_t best_errors = std::numeric_limits<std::size_t>::max();
  double best_gap = -1.0;
  double best_cut = all.front().first;
  std::size_t i = 0;
  while (i < all.size()) {
    const double value = all[i].first;
    while (i < all.size() && all[i].first == value) {
      if (all[i].second) ++high_below;
      else --low_above;
      ++i;
    }
    if (i == all.size()) break;
    const double next = all[i].first;
    const std::size_t errors = low_above + high_below;
    const double gap = next - value;
    if (errors < best_errors || (errors == best_errors && gap > best_gap)) {
      best_errors = errors;
      best_gap = gap;
      best_cut = 0.5 * (value + next);
    }
  }
  return best_cut;
}

SegmentThresholds calibrate_thresholds(std::span<const LabeledStats> samples) {
  std::vector<double> fft_low, fft_high, nn_low, nn_high;
  for (const auto& s : samples) {
    if (s.label == SegmentLabel::kS1) {
      fft_high.push_back(s.stats.fft_energy);
    } else {
      fft_low.push_back(s.stats.fft_energy);
      (s.label == SegmentLabel::kS2 ? nn_low : nn_high).push_back(s.stats.nn_ratio);
    }
  }
  SegmentThresholds t{fit_threshold(fft_low, fft_high), fit_threshold(nn_low, nn_high)};
  t.check();
  return t;
}

}  // namespace routegen
