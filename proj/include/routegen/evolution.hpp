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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "routegen/dsl.hpp"
#include "routegen/fitness.hpp"

namespace routegen {

enum class DesignerOp { kInit, kReflect, kCrossover, kLongReflect, kMutate };

std::string_view to_string(DesignerOp op);

/// A program as shown to the designer.
struct ProgramRef {
  std::string id;
  GeneratorProgram program;
  std::optional<double> fitness;
};

/// Payload per operation:
///   Init:        programs = {seed program}, init_index = slot
///   Reflect:     programs = {better, worse}
///   Crossover:   programs = {better, worse}, texts = {pair reflection}
///   LongReflect: texts = {previous long-term (may be empty), new short-terms...}
///   Mutate:      programs = {current best}, texts = {long-term reflection}
struct DesignerRequest {
  DesignerOp op = DesignerOp::kInit;
  ProgramCategory category = ProgramCategory::kS3;
  std::uint64_t request_id = 0;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  int init_index = 0;
  std::vector<ProgramRef> programs;
  std::vector<std::string> texts;
};

struct DesignerResponse {
  std::string text;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Operator backend. Implementations must be safe to call concurrently.
class Designer {
 public:
  virtual ~Designer() = default;
  virtual DesignerResponse complete(const DesignerRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic offline designer. Programs come back as fenced JSON.
///   Init: the seed program with 2 + (slot % 5) single-node edits.
///   Reflect: text derived from the pair ids.
///   Crossover: subtree swap between the parents.
///   LongReflect: previous text and new reflections, deduplicated by line.
///   Mutate: exactly one node changed (a parameter, a weight or a leaf kind).
class MockDesigner final : public Designer {
 public:
  DesignerResponse complete(const DesignerRequest& request) override;
  std::string name() const override { return "mock"; }
};

/// Single-node edit used by the mock designer. The result always validates
/// and differs from the input in exactly one node.
GeneratorProgram mutate_one_node(const GeneratorProgram& program, Rng& rng);

/// Replaces a random subtree of `a` with a random subtree of `b`, keeping the
/// result within bounds. Falls back to mutate_one_node(a).
GeneratorProgram subtree_crossover(const GeneratorProgram& a, const GeneratorProgram& b, Rng& rng);

struct Individual {
  std::string id;
  GeneratorProgram program;
  std::string hash;
  std::optional<double> fitness;  // set once
  std::optional<FitnessReport> report;
  std::vector<std::string> parent_ids;
  int birth_iteration = 0;
  std::string origin;  // init, crossover, mutation
};

nlohmann::json to_json(const Individual& individual);

struct Population {
  std::vector<Individual> members;
  std::size_t capacity = 0;
};

struct EvolutionConfig {
  std::size_t init_population = 30;
  std::size_t offspring_per_iteration = 10;
  double crossover_rate = 1.0;
  double mutation_rate = 0.5;
  std::size_t max_iterations = 10;
  std::size_t max_evaluations = 125;
  std::size_t stagnation_limit = 3;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  /// Designer attempts per init slot before the slot is skipped.
  std::size_t init_attempts = 3;
  /// Worker threads for designer requests and fitness calls.
  std::size_t jobs = 1;

  /// Throws kInvalidArgument on non-positive counts or rates outside [0,1].
  void check() const;
};

nlohmann::json to_json(const EvolutionConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
EvolutionConfig evolution_config_from_json(const nlohmann::json& doc);

struct ShortReflection {
  std::string better_id;
  std::string worse_id;
  std::string text;
};

struct ReflectionMemory {
  std::vector<ShortReflection> short_term;
  std::string long_term;
  int long_term_iteration = -1;
};

/// Sorting order: fitness, then birth iteration, program hash and id.
bool ranks_before(const Individual& a, const Individual& b);

/// Keeps the best member, then fills the remaining slots by sampling without
/// replacement with weights N - rank + 1 (rank 1 = best). Throws
/// kUnevaluatedMember when a member has no fitness.
Population rank_select(const Population& population, std::size_t capacity, std::uint64_t seed);

/// Random pairing; with an odd count the last shuffled member stays unpaired.
std::vector<std::pair<std::size_t, std::size_t>> pair_members(std::size_t count, Rng& rng);

struct FailureRecord {
  int iteration = 0;
  std::string stage;
  std::string message;
  std::vector<std::string> details;
};

struct IterationRecord {
  int iteration = 0;
  double best_fitness = 0.0;
  std::string best_id;
  std::size_t evaluations = 0;  // cumulative
  bool mutation_fired = false;
  std::size_t new_members = 0;
  std::vector<std::string> population;  // ids after selection, rank order
};

struct EvolutionReport {
  ProgramCategory category = ProgramCategory::kS3;
  EvolutionConfig config;
  std::optional<Individual> best;
  std::vector<IterationRecord> iterations;
  std::vector<Individual> lineage;  // every evaluated or attempted individual
  std::vector<FailureRecord> failures;
  std::size_t evaluations = 0;
  std::string stop_reason;
  ReflectionMemory memory;
  std::vector<nlohmann::json> events;

  std::vector<double> best_fitness_sequence() const;
};

nlohmann::json to_json(const EvolutionReport& report);

/// Writes config.json, report.json, events.jsonl, best_program.json and per
/// iteration population and best-program files under `dir`.
void write_run_artifacts(const EvolutionReport& report, const std::filesystem::path& dir);

/// Runs the loop: init, evaluate, then per iteration short-term reflection,
/// crossover, long-term reflection, mutation, evaluation of the new members
/// and rank selection. Stops on max_iterations, max_evaluations, stagnation
/// or an unavailable designer (best-so-far is kept).
EvolutionReport evolve(const EvolutionConfig& config, Designer& designer,
                       const FitnessFn& fitness, ProgramCategory category,
                       const std::optional<GeneratorProgram>& seed = std::nullopt);

}  // namespace routegen
