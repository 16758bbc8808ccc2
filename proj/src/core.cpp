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

#include "routegen/core.hpp"

#include <algorithm>
#include <numeric>

namespace routegen {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDegenerateInput: return "DegenerateInput";
    case Errc::kMissingCapacity: return "MissingCapacity";
    case Errc::kUnsupportedProblemType: return "UnsupportedProblemType";
    case Errc::kUnsupportedEdgeWeightType: return "UnsupportedEdgeWeightType";
    case Errc::kMalformedSection: return "MalformedSection";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kResourceExhausted: return "ResourceExhausted";
    case Errc::kInvalidProgram: return "InvalidProgram";
    case Errc::kInfeasibleDemand: return "InfeasibleDemand";
    case Errc::kNonPositiveOptimum: return "NonPositiveOptimum";
    case Errc::kUnevaluatedMember: return "UnevaluatedMember";
    case Errc::kDesignerUnavailable: return "DesignerUnavailable";
    case Errc::kAuthMissing: return "AuthMissing";
    case Errc::kNoProgramFound: return "NoProgramFound";
    case Errc::kUnknownCategory: return "UnknownCategory";
    case Errc::kEvaluatorTimeout: return "EvaluatorTimeout";
    case Errc::kEvaluatorProtocol: return "EvaluatorProtocol";
    case Errc::kEvaluatorFailed: return "EvaluatorFailed";
    case Errc::kMissingCategoryProgram: return "MissingCategoryProgram";
    case Errc::kScheduleGap: return "ScheduleGap";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(ProblemKind kind) {
  return kind == ProblemKind::kTsp ? "TSP" : "CVRP";
}

std::string_view to_string(SegmentLabel label) {
  switch (label) {
    case SegmentLabel::kS1: return "S1";
    case SegmentLabel::kS2: return "S2";
    case SegmentLabel::kS3: return "S3";
  }
  return "S3";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "TSP") return ProblemKind::kTsp;
  if (text == "CVRP") return ProblemKind::kCvrp;
  throw Error(Errc::kUnsupportedProblemType, std::string(text));
}

SegmentLabel parse_segment_label(std::string_view text) {
  if (text == "S1") return SegmentLabel::kS1;
  if (text == "S2") return SegmentLabel::kS2;
  if (text == "S3") return SegmentLabel::kS3;
  throw Error(Errc::kUnknownCategory, std::string(text));
}

void Instance::check() const {
  if (nodes.rows() < 2) {
    throw Error(Errc::kInvalidArgument, name + ": fewer than 2 nodes");
  }
  if (!nodes.allFinite()) {
    throw Error(Errc::kInvalidArgument, name + ": non-finite coordinate");
  }
  if (kind == ProblemKind::kTsp) {
    if (depot_index || demands || capacity) {
      throw Error(Errc::kInvalidArgument,
                  name + ": TSP instance carries CVRP fields");
    }
    return;
  }
  if (!depot_index || !demands || !capacity) {
    throw Error(Errc::kInvalidArgument,
                name + ": CVRP instance needs depot, demands and capacity");
  }
  if (*depot_index < 0 || *depot_index >= size()) {
    throw Error(Errc::kInvalidArgument, name + ": depot index out of range");
  }
  if (demands->size() != size()) {
    throw Error(Errc::kInvalidArgument, name + ": demand count != node count");
  }
  if ((*demands)(*depot_index) != 0.0) {
    throw Error(Errc::kInvalidArgument, name + ": depot demand must be 0");
  }
  if ((demands->array() < 0.0).any() || !demands->allFinite()) {
    throw Error(Errc::kInvalidArgument, name + ": negative demand");
  }
  if (!(*capacity > 0.0)) {
    throw Error(Errc::kInvalidArgument, name + ": capacity must be positive");
  }
}

void CvrpParams::check() const {
  if (demand_low < 1 || demand_high < demand_low) {
    throw Error(Errc::kInvalidArgument, "demand range must satisfy 1 <= low <= high");
  }
  if (!(r_min <= r_mode && r_mode <= r_max) || !(r_min > 0.0)) {
    throw Error(Errc::kInvalidArgument, "triangular parameters must satisfy 0 < min <= mode <= max");
  }
  if (!(k > 0.0)) throw Error(Errc::kInvalidArgument, "k must be positive");
}

std::vector<std::int64_t> sample_demands(Index n, const CvrpParams& params,
                                         Rng& rng) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "sample_demands needs n >= 1");
  params.check();
  std::vector<std::int64_t> out(static_cast<std::size_t>(n));
  for (auto& d : out) d = rng.uniform_int(params.demand_low, params.demand_high);
  return out;
}

std::vector<std::int64_t> sample_demands(Index n, const CvrpParams& params,
                                         std::uint64_t seed) {
  Rng rng(seed, 0x64656d616e64ULL);
  return sample_demands(n, params, rng);
}

double sample_capacity_ratio(const CvrpParams& params, Rng& rng) {
  return rng.triangular(params.r_min, params.r_mode, params.r_max);
}

std::int64_t exact_ceil_product(double x, std::int64_t num, std::int64_t den) {
  using u128 = unsigned __int128;
  if (!(x >= 0.0) || !std::isfinite(x) || num < 0 || den <= 0) {
    throw Error(Errc::kInvalidArgument, "exact_ceil_product: bad operands");
  }
  if (x == 0.0 || num == 0) return 0;
  int exp = 0;
  const double frac = std::frexp(x, &exp);
  const auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  int shift = exp - 53;  // x == mantissa * 2^shift exactly
  u128 value = static_cast<u128>(mantissa) * static_cast<u128>(num);
  if (shift >= 0) {
    if (shift > 20) throw Error(Errc::kInvalidArgument, "exact_ceil_product: x too large");
    value <<= shift;
  } else {
    const int s = -shift;
    if (s >= 127) {
      value = 1;
    } else {
      const u128 mask = (static_cast<u128>(1) << s) - 1;
      const bool rem = (value & mask) != 0;
      value = (value >> s) + (rem ? 1 : 0);
    }
  }
  const u128 d = static_cast<u128>(den);
  const u128 q = (value + d - 1) / d;
  return static_cast<std::int64_t>(q);
}

double compute_capacity(std::span<const std::int64_t> demands, double r,
                        const CvrpParams& params) {
  if (demands.empty()) {
    throw Error(Errc::kInvalidArgument, "compute_capacity needs demands");
  }
  if (!(r > 0.0)) throw Error(Errc::kInvalidArgument, "r must be positive");
  if (!(params.k > 0.0)) throw Error(Errc::kInvalidArgument, "k must be positive");
  std::int64_t sum = 0;
  std::int64_t max_demand = 0;
  for (auto d : demands) {
    if (d < 0) throw Error(Errc::kInvalidArgument, "negative demand");
    sum += d;
    max_demand = std::max(max_demand, d);
  }
  const auto n = static_cast<std::int64_t>(demands.size());
  const std::int64_t by_mean = exact_ceil_product(r, sum, n);
  const std::int64_t by_max = exact_ceil_product(params.k, max_demand, 1);
  return static_cast<double>(std::max(by_mean, by_max));
}

Instance normalize_demands(const Instance& instance) {
  if (!instance.is_cvrp() || !instance.capacity || !instance.demands) {
    throw Error(Errc::kMissingCapacity,
                instance.name + ": demand normalization needs a CVRP instance");
  }
  const double q = *instance.capacity;
  if (!(q > 0.0)) throw Error(Errc::kMissingCapacity, instance.name + ": capacity <= 0");
  Instance out = instance;
  *out.demands = *instance.demands / q;
  out.capacity = 1.0;
  return out;
}

Instance normalize_instance(const Instance& instance) {
  Instance out = instance;
  out.nodes = normalize_coords(instance.nodes).first;
  return out;
}

}  // namespace routegen
