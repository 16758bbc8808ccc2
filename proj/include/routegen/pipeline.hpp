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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "routegen/designer.hpp"
#include "routegen/evolution.hpp"
#include "routegen/stats.hpp"
#include "routegen/vrplib.hpp"

namespace routegen {

/// Batch size `batch` for sizes in [lo, hi).
struct BatchRule {
  Index lo = 0;
  Index hi = std::numeric_limits<Index>::max();
  std::size_t batch = 1;
};

struct BatchSchedule {
  std::string name;
  std::vector<BatchRule> rules;

  /// Throws kInvalidArgument unless rules are non-empty, ordered and disjoint.
  void check() const;
  /// Throws kScheduleGap when no rule covers n.
  std::size_t batch_size(Index n) const;

  static BatchSchedule pomo_tsp();
  static BatchSchedule pomo_cvrp();
  static BatchSchedule lehd_tsp();
  static BatchSchedule lehd_cvrp();
  /// One of pomo_tsp, pomo_cvrp, lehd_tsp, lehd_cvrp.
  static BatchSchedule preset(std::string_view name);
};

nlohmann::json to_json(const BatchSchedule& schedule);
/// Accepts a preset name or {"name": ..., "rules": [{"lo","hi","batch"}]}.
BatchSchedule batch_schedule_from_json(const nlohmann::json& doc);

/// Largest-remainder apportionment of `total` over `weights`; remainder ties
/// go to the earlier index. Counts always sum to total.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights);

/// Category of a labeled validation entry (TSP by segment, CVRP as CVRP).
/// Throws kInvalidArgument for an unlabeled TSP entry.
ProgramCategory entry_category(const ManifestEntry& entry);

struct Phase1Options {
  std::size_t total = 0;
  Index n = 100;
  std::uint64_t seed = 0;
  bool with_labels = false;
  std::size_t jobs = 1;
};

struct Phase1Result {
  std::map<ProgramCategory, std::size_t> counts;
  std::vector<std::string> files;  // relative to the output directory
};

/// Emits `total` synthetic instances split across categories in proportion
/// to the validation label counts. Writes instances/ with one JSON sidecar
/// per instance and manifest.json into `out_dir`. Throws
/// kMissingCategoryProgram when a needed category has no program.
Phase1Result emit_phase1(const std::map<ProgramCategory, GeneratorProgram>& programs,
                         const CorpusManifest& manifest, const Phase1Options& options,
                         const std::filesystem::path& out_dir);

struct Phase2Batch {
  std::string instance;
  Index n = 0;
  std::size_t batch_size = 0;
  std::vector<std::string> files;  // relative to the output directory
};

/// Replicates every validation instance batch_size(n) times into its own
/// batch directory; batch order is a seeded shuffle. Writes manifest.json.
std::vector<Phase2Batch> emit_phase2(const CorpusManifest& manifest,
                                     const std::vector<Instance>& instances,
                                     const BatchSchedule& schedule, std::uint64_t seed,
                                     const std::filesystem::path& out_dir);

/// Rounds coordinates (and demands/capacity) to `decimals` places, so the
/// written file reads back to the same values.
Instance round_instance(const Instance& instance, int decimals);

/// Thresholds fitted on `samples` instances of each TSP seed program at size n.
SegmentThresholds calibrate_from_seeds(std::size_t samples, Index n, std::uint64_t seed,
                                       std::size_t jobs = 1);

struct FitnessSettings {
  Index n = kDefaultFitnessSize;
  std::size_t samples = kDefaultFitnessSamples;
  std::optional<ExternalEvaluatorConfig> external;
};

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path manifest;    // optional; used instead of scanning
  std::filesystem::path best_known;  // optional sidecar for scanning
  SegmentThresholds thresholds = SegmentThresholds::calibrated();
  SplitOptions split;
  EvolutionConfig evolution;
  std::optional<DesignerConfig> designer;
  bool mock_designer = false;
  FitnessSettings fitness;
  std::filesystem::path output;
  Phase1Options phase1;
  BatchSchedule phase2 = BatchSchedule::pomo_tsp();
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// Throws kInvalidArgument on inconsistent settings.
  void check() const;
};

/// Relative paths are resolved against `base_dir`. Throws kInvalidArgument.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const PipelineConfig& config);

/// Error raised by a pipeline stage; the message starts with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Refuses a non-empty output directory unless `force`, in which case its
/// contents are removed first.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

/// load -> stats and segmentation -> split -> evolve per category -> phase 1
/// -> phase 2 -> summary.json. Returns the summary document.
nlohmann::json run_pipeline(const PipelineConfig& config, bool force = false);

}  // namespace routegen
