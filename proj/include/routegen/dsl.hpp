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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "routegen/core.hpp"

namespace routegen {

enum class PrimitiveKind {
  kUniform,
  kGrid,
  kRing,
  kClusterMixture,
  kMotifReplicate,
  kStripe,
  kJitter,
  kAffine,
  kMixture,
  kDropout,
};

inline constexpr std::size_t kPrimitiveKindCount = 10;

std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> parse_primitive_kind(std::string_view text);

/// One node of a generator program. `weights` is used by Mixture only.
struct PrimitiveNode {
  PrimitiveKind kind = PrimitiveKind::kUniform;
  std::map<std::string, double> params;
  std::vector<double> weights;
  std::vector<PrimitiveNode> children;

  bool operator==(const PrimitiveNode&) const = default;

  /// Parameter value, falling back to the kind's declared default.
  double param(const std::string& name) const;
};

struct ParamSpec {
  std::string_view name;
  double lo;
  double hi;
  double fallback;
  bool integer = false;
};

struct KindSpec {
  PrimitiveKind kind;
  std::span<const ParamSpec> params;
  std::size_t min_children;
  std::size_t max_children;
};

const KindSpec& kind_spec(PrimitiveKind kind);

/// Generator families: the three structural segments plus CVRP customers.
enum class ProgramCategory { kS1, kS2, kS3, kCvrp };

std::string_view to_string(ProgramCategory category);
ProgramCategory parse_program_category(std::string_view text);
ProgramCategory category_of(SegmentLabel label);

enum class CvrpScheme { kCenterDepot, kRandomDepot, kCornerDepot };

std::string_view to_string(CvrpScheme scheme);
CvrpScheme parse_cvrp_scheme(std::string_view text);

inline constexpr int kMaxProgramDepth = 8;
inline constexpr std::size_t kMaxProgramNodes = 64;

struct GeneratorProgram {
  ProgramCategory category = ProgramCategory::kS3;
  /// CVRP only. Unset means the depot scheme is drawn per instance.
  std::optional<CvrpScheme> depot_scheme;
  PrimitiveNode root;
  std::string description;
  int version = 1;

  bool operator==(const GeneratorProgram&) const = default;
};

struct Violation {
  std::string path;
  std::string message;
};

/// Static check of structure, parameter ranges and resource bounds.
std::vector<Violation> validate_program(const GeneratorProgram& program);

std::string to_string(const Violation& v);

int program_depth(const PrimitiveNode& node);
std::size_t program_node_count(const PrimitiveNode& node);

nlohmann::json to_json(const PrimitiveNode& node);
nlohmann::json to_json(const GeneratorProgram& program);

/// Structural parse; throws kInvalidProgram on schema errors. Does not check
/// parameter ranges (see validate_program).
GeneratorProgram program_from_json(const nlohmann::json& doc);
GeneratorProgram parse_program(std::string_view text);

/// Pretty JSON (two-space indent, sorted keys).
std::string render_program(const GeneratorProgram& program);

/// First 16 hex digits of the SHA-256 of the compact JSON rendering.
std::string program_hash(const GeneratorProgram& program);

/// Rows deduplicated at 3-decimal rounding (first occurrence wins), padded
/// with fresh 3-decimal uniform points avoiding collisions, truncated to n.
/// Throws kResourceExhausted when padding needs more than 10 * n draws.
PointSet2d ensure_n_unique(const PointSet2d& points, Index n, Rng& rng);
PointSet2d ensure_n_unique(const PointSet2d& points, Index n, std::uint64_t seed);

/// Raw output of one node for `count` requested points. May contain
/// duplicates and points outside the unit square.
PointSet2d sample_node(const PrimitiveNode& node, Index count, Rng& rng);

/// Samples an instance of `n` nodes (TSP) or `n` customers plus one depot
/// (CVRP). Deterministic in (program, n, seed).
Instance sample_instance(const GeneratorProgram& program, Index n, std::uint64_t seed,
                         const CvrpParams& cvrp = {});

/// Depot position for a fixed scheme.
Point2d depot_position(CvrpScheme scheme, Rng& rng);

GeneratorProgram seed_program(ProgramCategory category);
GeneratorProgram seed_program(SegmentLabel label);
GeneratorProgram seed_program(CvrpScheme scheme);

}  // namespace routegen
