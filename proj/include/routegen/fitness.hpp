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

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "routegen/dsl.hpp"
#include "routegen/stats.hpp"

namespace routegen {

/// Features compared by the divergence, in report order.
inline constexpr std::array<std::string_view, 2> kFeatureNames = {"fft_energy", "nn_ratio"};

struct FeatureVector {
  double fft_energy = 0.0;
  double nn_ratio = 0.0;

  static FeatureVector from(const StructuralStats& s) { return {s.fft_energy, s.nn_ratio}; }
  double operator[](std::size_t i) const { return i == 0 ? fft_energy : nn_ratio; }
};

struct FitnessReport {
  double score = 0.0;  // lower is better
  std::map<std::string, double> per_feature;
  std::size_t samples_used = 0;
  std::uint64_t seed = 0;
  /// Features whose target sample has zero variance; compared by absolute
  /// mean difference instead of the standardized distance.
  std::vector<std::string> degenerate_features;
};

nlohmann::json to_json(const FitnessReport& report);

/// Wasserstein-1 distance between two empirical distributions, computed by
/// integrating |F_a - F_b| over the merged support.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Stats of `samples` instances of size n; instance i uses derive_seed(seed, i).
std::vector<StructuralStats> sample_stats(const GeneratorProgram& program, Index n,
                                          std::size_t samples, std::uint64_t seed,
                                          std::size_t jobs = 1);

/// Mean over features of the Wasserstein-1 distance after standardizing both
/// samples by the target mean and population standard deviation.
FitnessReport divergence(std::span<const StructuralStats> generated,
                         std::span<const StructuralStats> target);

inline constexpr std::size_t kMinFitnessSamples = 8;
inline constexpr std::size_t kDefaultFitnessSamples = 32;
inline constexpr Index kDefaultFitnessSize = 100;

FitnessReport feature_divergence(const GeneratorProgram& program,
                                 std::span<const StructuralStats> target, Index n,
                                 std::size_t samples, std::uint64_t seed, std::size_t jobs = 1);

/// User-supplied evaluator run as `<command> <workdir>` through /bin/sh.
struct ExternalEvaluatorConfig {
  std::string command;
  std::filesystem::path work_root;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

/// Writes the sampled instances and meta.json into a fresh work directory,
/// runs the evaluator and reads its score from the last stdout line.
FitnessReport external_fitness(const GeneratorProgram& program,
                               const ExternalEvaluatorConfig& config, Index n,
                               std::size_t samples, std::uint64_t seed);

/// Fitness callback used by the evolution engine.
using FitnessFn = std::function<FitnessReport(const GeneratorProgram&, std::uint64_t seed)>;

}  // namespace routegen
