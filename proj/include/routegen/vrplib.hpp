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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "routegen/core.hpp"

namespace routegen {

struct ParseWarning {
  std::size_t line = 0;
  std::string message;
};

/// Parses the EUC_2D subset of TSPLib (TSP) and CVRPLib (CVRP). Keywords may
/// come in any order; sections end at the next keyword, a `-1` line or EOF.
/// Node ids are remapped to 0-based indices. Unknown keywords are skipped and
/// reported through `warnings`.
Instance parse_instance(std::string_view text,
                        std::vector<ParseWarning>* warnings = nullptr);

Instance read_instance_file(const std::filesystem::path& path,
                            std::vector<ParseWarning>* warnings = nullptr);

/// Renders the instance with `precision` decimals per coordinate. CVRP
/// instances get CAPACITY, DEMAND_SECTION and DEPOT_SECTION.
std::string write_instance(const Instance& instance, int precision = 6);

void write_instance_file(const std::filesystem::path& path,
                         const Instance& instance, int precision = 6);

/// File extension used for the instance kind (".tsp" or ".vrp").
std::string_view instance_extension(ProblemKind kind);

enum class SplitRole { kValidation, kUnseen };
std::string_view to_string(SplitRole role);

struct ManifestEntry {
  std::string path;
  std::string name;
  Index n = 0;
  ProblemKind kind = ProblemKind::kTsp;
  std::optional<double> best_known;
  std::optional<SegmentLabel> segment;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, SplitRole> split;
  std::uint64_t seed = 0;

  const ManifestEntry* find(std::string_view name) const;
  /// Entries whose split role is `role`, in entry order.
  std::vector<ManifestEntry> with_role(SplitRole role) const;
  /// Throws kInvalidArgument on duplicate names or a split that does not
  /// cover exactly the entry set.
  void check() const;
};

nlohmann::json to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const nlohmann::json& doc);

/// Relative entry paths are resolved against the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const CorpusManifest& manifest);

/// Best-known optimum sidecar: a JSON object mapping instance name to value.
std::map<std::string, double> load_best_known(const std::filesystem::path& path);

struct Corpus {
  CorpusManifest manifest;
  std::vector<Instance> instances;  // aligned with manifest.entries
};

/// Parses every *.tsp / *.vrp file under `dir`; entries are ordered by name.
Corpus scan_corpus(const std::filesystem::path& dir,
                   const std::map<std::string, double>& best_known = {},
                   std::size_t jobs = 1);

/// Loads the instances a manifest points to, in entry order.
std::vector<Instance> load_instances(const CorpusManifest& manifest,
                                     std::size_t jobs = 1);

struct SplitOptions {
  double validation_fraction = 0.7;
  /// Instances with n >= size_cap are dropped before splitting.
  std::optional<Index> size_cap;
  /// Exact validation count; overrides round(fraction * N).
  std::optional<std::size_t> validation_count;
  /// Explicit validation members; overrides both of the above.
  std::vector<std::string> validation_names;
  std::uint64_t seed = 0;
};

/// Deterministic validation/unseen partition by seeded shuffle of the
/// name-ordered entries.
CorpusManifest split_corpus(const CorpusManifest& manifest,
                            const SplitOptions& options);

CorpusManifest split_corpus(const CorpusManifest& manifest,
                            double validation_fraction,
                            std::optional<Index> size_cap, std::uint64_t seed);

}  // namespace routegen
