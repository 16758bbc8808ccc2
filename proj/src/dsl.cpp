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

#include "routegen/dsl.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include "routegen/util.hpp"

namespace routegen {
namespace {

constexpr double kPi = std::numbers::pi;

constexpr ParamSpec kUniformParams[] = {{"margin", 0.0, 0.45, 0.0}};
constexpr ParamSpec kGridParams[] = {
    {"aspect", 0.25, 4.0, 1.0},
    {"margin", 0.0, 0.45, 0.05},
};
constexpr ParamSpec kRingParams[] = {
    {"cx", 0.0, 1.0, 0.5},           {"cy", 0.0, 1.0, 0.5},
    {"radius", 0.005, 0.5, 0.35},    {"thickness", 0.0, 0.2, 0.01},
    {"arc", 0.05, 1.0, 1.0},
};
constexpr ParamSpec kClusterParams[] = {
    {"clusters", 1, 64, 6, true},   {"sigma", 0.001, 0.3, 0.04},
    {"sigma_spread", 0.0, 1.0, 0.3}, {"margin", 0.0, 0.45, 0.1},
    {"size_skew", 0.0, 2.0, 0.5},
};
constexpr ParamSpec kMotifParams[] = {
    {"copies", 1, 400, 10, true},     {"motif_scale", 0.005, 1.0, 0.05},
    {"lattice_jitter", 0.0, 0.5, 0.1}, {"rotate", 0.0, 1.0, 0.0},
    {"margin", 0.0, 0.45, 0.08},
};
constexpr ParamSpec kStripeParams[] = {
    {"bands", 1, 64, 8, true},
    {"angle", 0.0, kPi, 0.0},
    {"width", 0.01, 1.0, 0.2},
    {"phase", 0.0, 1.0, 0.0},
};
constexpr ParamSpec kJitterParams[] = {{"sigma", 0.0, 0.2, 0.005}};
constexpr ParamSpec kAffineParams[] = {
    {"rotation", -kPi, kPi, 0.0}, {"scale_x", 0.05, 2.0, 1.0},
    {"scale_y", 0.05, 2.0, 1.0},  {"shear", -1.0, 1.0, 0.0},
    {"tx", -0.5, 0.5, 0.0},       {"ty", -0.5, 0.5, 0.0},
};
constexpr ParamSpec kDropoutParams[] = {
    {"holes", 1, 16, 3, true},
    {"radius", 0.01, 0.4, 0.1},
};

const std::array<KindSpec, kPrimitiveKindCount> kKindSpecs = {{
    {PrimitiveKind::kUniform, kUniformParams, 0, 0},
    {PrimitiveKind::kGrid, kGridParams, 0, 0},
    {PrimitiveKind::kRing, kRingParams, 0, 0},
    {PrimitiveKind::kClusterMixture, kClusterParams, 0, 0},
    {PrimitiveKind::kMotifReplicate, kMotifParams, 1, 1},
    {PrimitiveKind::kStripe, kStripeParams, 0, 0},
    {PrimitiveKind::kJitter, kJitterParams, 1, 1},
    {PrimitiveKind::kAffine, kAffineParams, 1, 1},
    {PrimitiveKind::kMixture, {}, 1, 8},
    {PrimitiveKind::kDropout, kDropoutParams, 1, 1},
}};

constexpr std::array<std::string_view, kPrimitiveKindCount> kKindNames = {
    "Uniform", "Grid",   "Ring",   "ClusterMixture", "MotifReplicate",
    "Stripe",  "Jitter", "Affine", "Mixture",        "Dropout"};

struct PairHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& p) const noexcept {
    return static_cast<std::size_t>(
        mix64(static_cast<std::uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL ^
              static_cast<std::uint64_t>(p.second)));
  }
};

std::pair<std::int64_t, std::int64_t> round3_key(double x, double y) {
  return {std::llround(x * 1000.0), std::llround(y * 1000.0)};
}

void check_node(const PrimitiveNode& node, const std::string& path, int depth,
                std::vector<Violation>& out) {
  const KindSpec& spec = kind_spec(node.kind);
  const auto kind_name = std::string(to_string(node.kind));
  if (node.children.size() < spec.min_children || node.children.size() > spec.max_children) {
    out.push_back({path, kind_name + " takes " + std::to_string(spec.min_children) + ".." +
                             std::to_string(spec.max_children) + " children, has " +
                             std::to_string(node.children.size())});
  }
  for (const auto& [name, value] : node.params) {
    const auto it = std::find_if(spec.params.begin(), spec.params.end(),
                                 [&](const ParamSpec& p) { return p.name == name; });
    if (it == spec.params.end()) {
      out.push_back({path, kind_name + " has no parameter '" + name + "'"});
      continue;
    }
    if (!std::isfinite(value) || value < it->lo || value > it->hi) {
      out.push_back({path + "." + name, "value " + std::to_string(value) + " outside [" +
                                            std::to_string(it->lo) + ", " +
                                            std::to_string(it->hi) + "]"});
    } else if (it->integer && value != std::floor(value)) {
      out.push_back({path + "." + name, "must be an integer"});
    }
  }
  if (node.kind == PrimitiveKind::kMixture) {
    if (node.weights.size() != node.children.size()) {
      out.push_back({path + ".weights", "needs one weight per child"});
    }
    for (std::size_t i = 0; i < node.weights.size(); ++i) {
      if (!std::isfinite(node.weights[i]) || !(node.weights[i] > 0.0)) {
        out.push_back({path + ".weights[" + std::to_string(i) + "]", "weight must be positive"});
      }
    }
  } else if (!node.weights.empty()) {
    out.push_back({path + ".weights", "only Mixture takes weights"});
  }
  // Depth violations are reported once, at the first node past the bound.
  if (depth > kMaxProgramDepth) {
    out.push_back({path, "depth " + std::to_string(depth) + " exceeds " +
                             std::to_string(kMaxProgramDepth)});
    return;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    check_node(node.children[i], path + ".children[" + std::to_string(i) + "]", depth + 1, out);
  }
}

[[noreturn]] void bad_program(const std::string& what) {
  throw Error(Errc::kInvalidProgram, what);
}

PrimitiveNode node_from_json(const nlohmann::json& j, int depth) {
  if (depth > 4 * kMaxProgramDepth) bad_program("program nesting too deep");
  if (!j.is_object()) bad_program("node must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) bad_program("node needs a string 'kind'");
  const auto kind = parse_primitive_kind(j["kind"].get<std::string>());
  if (!kind) bad_program("unknown primitive kind '" + j["kind"].get<std::string>() + "'");
  PrimitiveNode node;
  node.kind = *kind;
  if (j.contains("params")) {
    if (!j["params"].is_object()) bad_program("'params' must be an object");
    for (const auto& [name, value] : j["params"].items()) {
      if (!value.is_number()) bad_program("parameter '" + name + "' must be numeric");
      node.params[name] = value.get<double>();
    }
  }
  if (j.contains("weights")) {
    if (!j["weights"].is_array()) bad_program("'weights' must be an array");
    for (const auto& w : j["weights"]) {
      if (!w.is_number()) bad_program("weights must be numeric");
      node.weights.push_back(w.get<double>());
    }
  }
  if (j.contains("children")) {
    if (!j["children"].is_array()) bad_program("'children' must be an array");
    for (const auto& c : j["children"]) node.children.push_back(node_from_json(c, depth + 1));
  }
  return node;
}

void clamp_unit(PointSet2d& pts) {
  for (Index i = 0; i < pts.rows(); ++i) {
    for (int c = 0; c < 2; ++c) {
      double& v = pts(i, c);
      if (!std::isfinite(v)) v = 0.5;
      v = std::clamp(v, 0.0, 1.0);
    }
  }
}

/// Largest-remainder split of `count` by positive weights.
std::vector<Index> split_count(Index count, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<Index> out(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> rema;
  Index assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(count) * weights[i] / total;
    out[i] = static_cast<Index>(std::floor(exact));
    assigned += out[i];
    rema.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < count && k < rema.size(); ++k, ++assigned) {
    ++out[rema[k].second];
  }
  return out;
}

PointSet2d sample_uniform(const PrimitiveNode& node, Index count, Rng& rng) {
  const double m = node.param("margin");
  PointSet2d pts(count, 2);
  for (Index i = 0; i < count; ++i) {
    pts(i, 0) = rng.uniform(m, 1.0 - m);
    pts(i, 1) = rng.uniform(m, 1.0 - m);
  }
  return pts;
}

PointSet2d sample_grid(const PrimitiveNode& node, Index count, Rng& rng) {
  const double aspect = node.param("aspect");
  const double m = node.param("margin");
  const Index cols = std::max<Index>(1, std::llround(std::sqrt(static_cast<double>(count) * aspect)));
  const Index rows = std::max<Index>(1, (count + cols - 1) / cols);
  std::vector<Index> sites(static_cast<std::size_t>(rows * cols));
  std::iota(sites.begin(), sites.end(), Index{0});
  rng.shuffle(std::span(sites));
  const double span_ = 1.0 - 2.0 * m;
  PointSet2d pts(count, 2);
  for (Index i = 0; i < count; ++i) {
    const Index s = sites[static_cast<std::size_t>(i)];
    pts(i, 0) = m + (static_cast<double>(s % cols) + 0.5) / static_cast<double>(cols) * span_;
    pts(i, 1) = m + (static_cast<double>(s / cols) + 0.5) / static_cast<double>(rows) * span_;
  }
  return pts;
}

PointSet2d sample_ring(const PrimitiveNode& node, Index count, Rng& rng) {
  const double cx = node.param("cx"), cy = node.param("cy");
  const double radius = node.param("radius"), thickness = node.param("thickness");
  const double arc = node.param("arc");
  const double start = rng.uniform(0.0, 2.0 * kPi);
  PointSet2d pts(count, 2);
  for (Index i = 0; i < count; ++i) {
    const double theta =
        start + 2.0 * kPi * arc * static_cast<double>(i) / static_cast<double>(count);
    const double r = radius + (thickness > 0.0 ? rng.normal(0.0, thickness) : 0.0);
    pts(i, 0) = cx + r * std::cos(theta);
    pts(i, 1) = cy + r * std::sin(theta);
  }
  return pts;
}

PointSet2d sample_clusters(const PrimitiveNode& node, Index count, Rng& rng) {
  const auto k = static_cast<std::size_t>(node.param("clusters"));
  const double sigma = node.param("sigma");
  const double spread = node.param("sigma_spread");
  const double m = node.param("margin");
  const double skew = node.param("size_skew");
  std::vector<Point2d> centers(k);
  std::vector<double> sigmas(k), cumulative(k);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    centers[c] = {rng.uniform(m, 1.0 - m), rng.uniform(m, 1.0 - m)};
    sigmas[c] = sigma * std::exp(spread * rng.normal());
    total += std::exp(skew * rng.normal());
    cumulative[c] = total;
  }
  PointSet2d pts(count, 2);
  for (Index i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    const auto c = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                     cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(k) - 1));
    pts(i, 0) = centers[c].x() + sigmas[c] * rng.normal();
    pts(i, 1) = centers[c].y() + sigmas[c] * rng.normal();
  }
  return pts;
}

PointSet2d sample_motifs(const PrimitiveNode& node, Index count, Rng& rng) {
  const auto copies = static_cast<Index>(node.param("copies"));
  const double scale = node.param("motif_scale");
  const double jitter = node.param("lattice_jitter");
  const double rotate = node.param("rotate");
  const double m = node.param("margin");
  const Index per_copy = std::max<Index>(1, (count + copies - 1) / copies);

  Rng child_rng = rng.split(1);
  PointSet2d motif = sample_node(node.children.front(), per_copy, child_rng);
  const Eigen::RowVector2d lo = motif.colwise().minCoeff();
  const Eigen::RowVector2d hi = motif.colwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  motif.rowwise() -= 0.5 * (lo + hi);
  if (extent > 0.0) motif /= extent;  // now within [-0.5, 0.5]^2

  const Index cols = std::max<Index>(1, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(copies)))));
  const Index rows = (copies + cols - 1) / cols;
  const double cell_w = (1.0 - 2.0 * m) / static_cast<double>(cols);
  const double cell_h = (1.0 - 2.0 * m) / static_cast<double>(rows);
  const double size = scale * std::min(cell_w, cell_h);

  PointSet2d pts(copies * per_copy, 2);
  for (Index j = 0; j < copies; ++j) {
    const double cx = m + (static_cast<double>(j % cols) + 0.5 + jitter * rng.uniform(-1.0, 1.0)) * cell_w;
    const double cy = m + (static_cast<double>(j / cols) + 0.5 + jitter * rng.uniform(-1.0, 1.0)) * cell_h;
    const double angle = rng.bernoulli(rotate) ? rng.uniform(0.0, 2.0 * kPi) : 0.0;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (Index i = 0; i < per_copy; ++i) {
      const double x = motif(i, 0), y = motif(i, 1);
      pts(j * per_copy + i, 0) = cx + size * (ca * x - sa * y);
      pts(j * per_copy + i, 1) = cy + size * (sa * x + ca * y);
    }
  }
  return pts;
}

PointSet2d sample_stripes(const PrimitiveNode& node, Index count, Rng& rng) {
  const double bands = node.param("bands");
  const double angle = node.param("angle");
  const double width = node.param("width");
  const double phase = node.param("phase");
  const double nx = std::cos(angle), ny = std::sin(angle);
  PointSet2d pts(count, 2);
  Index filled = 0;
  const Index max_attempts = 1000 * std::max<Index>(count, 1);
  for (Index attempt = 0; filled < count && attempt < max_attempts; ++attempt) {
    const double x = rng.uniform(), y = rng.uniform();
    const double t = (x * nx + y * ny) * bands + phase;
    if (t - std::floor(t) < width) {
      pts(filled, 0) = x;
      pts(filled, 1) = y;
      ++filled;
    }
  }
  for (; filled < count; ++filled) {
    pts(filled, 0) = rng.uniform();
    pts(filled, 1) = rng.uniform();
  }
  return pts;
}

PointSet2d sample_dropout(const PrimitiveNode& node, Index count, Rng& rng) {
  const auto holes = static_cast<std::size_t>(node.param("holes"));
  const double radius = node.param("radius");
  const double covered = std::min(0.9, static_cast<double>(holes) * kPi * radius * radius);
  const auto request = static_cast<Index>(
      std::ceil(1.25 * static_cast<double>(count) / (1.0 - covered))) + 8;
  Rng child_rng = rng.split(1);
  const PointSet2d raw = sample_node(node.children.front(), request, child_rng);
  std::vector<Point2d> centers(holes);
  for (auto& c : centers) c = {rng.uniform(), rng.uniform()};
  std::vector<Index> kept;
  for (Index i = 0; i < raw.rows(); ++i) {
    const bool inside = std::any_of(centers.begin(), centers.end(), [&](const Point2d& c) {
      return euclidean_distance(raw.row(i), c) < radius;
    });
    if (!inside) kept.push_back(i);
  }
  rng.shuffle(std::span(kept));
  const Index take = std::min<Index>(count, static_cast<Index>(kept.size()));
  PointSet2d pts(take, 2);
  for (Index i = 0; i < take; ++i) pts.row(i) = raw.row(kept[static_cast<std::size_t>(i)]);
  return pts;
}

}  // namespace

std::string_view to_string(PrimitiveKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<PrimitiveKind> parse_primitive_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<PrimitiveKind>(i);
  }
  return std::nullopt;
}

const KindSpec& kind_spec(PrimitiveKind kind) {
  return kKindSpecs[static_cast<std::size_t>(kind)];
}

double PrimitiveNode::param(const std::string& name) const {
  if (const auto it = params.find(name); it != params.end()) return it->second;
  for (const auto& p : kind_spec(kind).params) {
    if (p.name == name) return p.fallback;
  }
  throw Error(Errc::kInvalidProgram, std::string(to_string(kind)) + " has no parameter " + name);
}

std::string_view to_string(ProgramCategory category) {
  switch (category) {
    case ProgramCategory::kS1: return "S1";
    case ProgramCategory::kS2: return "S2";
    case ProgramCategory::kS3: return "S3";
    case ProgramCategory::kCvrp: return "CVRP";
  }
  return "S3";
}

ProgramCategory parse_program_category(std::string_view text) {
  if (text == "S1") return ProgramCategory::kS1;
  if (text == "S2") return ProgramCategory::kS2;
  if (text == "S3") return ProgramCategory::kS3;
  if (text == "CVRP") return ProgramCategory::kCvrp;
  throw Error(Errc::kUnknownCategory, std::string(text));
}

ProgramCategory category_of(SegmentLabel label) {
  switch (label) {
    case SegmentLabel::kS1: return ProgramCategory::kS1;
    case SegmentLabel::kS2: return ProgramCategory::kS2;
    case SegmentLabel::kS3: return ProgramCategory::kS3;
  }
  return ProgramCategory::kS3;
}

std::string_view to_string(CvrpScheme scheme) {
  switch (scheme) {
    case CvrpScheme::kCenterDepot: return "center";
    case CvrpScheme::kRandomDepot: return "random";
    case CvrpScheme::kCornerDepot: return "corner";
  }
  return "center";
}

CvrpScheme parse_cvrp_scheme(std::string_view text) {
  if (text == "center") return CvrpScheme::kCenterDepot;
  if (text == "random") return CvrpScheme::kRandomDepot;
  if (text == "corner") return CvrpScheme::kCornerDepot;
  throw Error(Errc::kUnknownCategory, "unknown depot scheme " + std::string(text));
}

int program_depth(const PrimitiveNode& node) {
  int deepest = 0;
  for (const auto& c : node.children) deepest = std::max(deepest, program_depth(c));
  return deepest + 1;
}

std::size_t program_node_count(const PrimitiveNode& node) {
  std::size_t count = 1;
  for (const auto& c : node.children) count += program_node_count(c);
  return count;
}

std::vector<Violation> validate_program(const GeneratorProgram& program) {
  std::vector<Violation> out;
  if (program.version < 1) out.push_back({"version", "must be >= 1"});
  if (program.depot_scheme && program.category != ProgramCategory::kCvrp) {
    out.push_back({"depot", "depot scheme only applies to CVRP programs"});
  }
  const int depth = program_depth(program.root);
  if (depth > kMaxProgramDepth) {
    out.push_back({"root", "tree depth " + std::to_string(depth) + " exceeds " +
                               std::to_string(kMaxProgramDepth)});
  }
  const std::size_t nodes = program_node_count(program.root);
  if (nodes > kMaxProgramNodes) {
    out.push_back({"root", "node count " + std::to_string(nodes) + " exceeds " +
                               std::to_string(kMaxProgramNodes)});
  }
  std::vector<Violation> node_violations;
  check_node(program.root, "root", 1, node_violations);
  for (auto& v : node_violations) {
    if (v.message.starts_with("depth ")) continue;  // already reported above
    out.push_back(std::move(v));
  }
  return out;
}

std::string to_string(const Violation& v) { return v.path + ": " + v.message; }

nlohmann::json to_json(const PrimitiveNode& node) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(node.kind));
  j["params"] = nlohmann::json::object();
  for (const auto& [name, value] : node.params) j["params"][name] = value;
  if (!node.weights.empty()) j["weights"] = node.weights;
  if (!node.children.empty()) {
    j["children"] = nlohmann::json::array();
    for (const auto& c : node.children) j["children"].push_back(to_json(c));
  }
  return j;
}

nlohmann::json to_json(const GeneratorProgram& program) {
  nlohmann::json j;
  j["category"] = std::string(to_string(program.category));
  j["description"] = program.description;
  j["version"] = program.version;
  if (program.category == ProgramCategory::kCvrp) {
    j["depot"] = program.depot_scheme ? std::string(to_string(*program.depot_scheme)) : "mixed";
  }
  j["root"] = to_json(program.root);
  return j;
}

GeneratorProgram program_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) bad_program("program must be a JSON object");
  GeneratorProgram p;
  if (!doc.contains("category") || !doc["category"].is_string()) bad_program("missing 'category'");
  try {
    p.category = parse_program_category(doc["category"].get<std::string>());
  } catch (const Error&) {
    bad_program("unknown category '" + doc["category"].get<std::string>() + "'");
  }
  if (doc.contains("description")) {
    if (!doc["description"].is_string()) bad_program("'description' must be a string");
    p.description = doc["description"].get<std::string>();
  }
  if (doc.contains("version")) {
    if (!doc["version"].is_number_integer()) bad_program("'version' must be an integer");
    p.version = doc["version"].get<int>();
  }
  if (doc.contains("depot")) {
    if (!doc["depot"].is_string()) bad_program("'depot' must be a string");
    const auto d = doc["depot"].get<std::string>();
    if (d != "mixed") {
      try {
        p.depot_scheme = parse_cvrp_scheme(d);
      } catch (const Error&) {
        bad_program("unknown depot scheme '" + d + "'");
      }
    }
  }
  if (!doc.contains("root")) bad_program("missing 'root'");
  p.root = node_from_json(doc["root"], 1);
  return p;
}

GeneratorProgram parse_program(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    bad_program(std::string("not valid JSON: ") + ex.what());
  }
  return program_from_json(doc);
}

std::string render_program(const GeneratorProgram& program) {
  return to_json(program).dump(2);
}

std::string program_hash(const GeneratorProgram& program) {
  return sha256_hex(to_json(program).dump()).substr(0, 16);
}

PointSet2d ensure_n_unique(const PointSet2d& points, Index n, Rng& rng) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "ensure_n_unique needs n >= 1");
  std::unordered_set<std::pair<std::int64_t, std::int64_t>, PairHash> seen;
  std::vector<Point2d> kept;
  kept.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < points.rows() && static_cast<Index>(kept.size()) < n; ++i) {
    const double x = points(i, 0), y = points(i, 1);
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if (seen.insert(round3_key(x, y)).second) kept.emplace_back(x, y);
  }
  const Index budget = 10 * n;
  Index draws = 0;
  while (static_cast<Index>(kept.size()) < n) {
    if (++draws > budget) {
      throw Error(Errc::kResourceExhausted,
                  "uniqueness repair exceeded " + std::to_string(budget) + " draws");
    }
    const double x = std::round(rng.uniform() * 1000.0) / 1000.0;
    const double y = std::round(rng.uniform() * 1000.0) / 1000.0;
    if (seen.insert(round3_key(x, y)).second) kept.emplace_back(x, y);
  }
  PointSet2d out(n, 2);
  for (Index i = 0; i < n; ++i) out.row(i) = kept[static_cast<std::size_t>(i)].transpose();
  return out;
}

PointSet2d ensure_n_unique(const PointSet2d& points, Index n, std::uint64_t seed) {
  Rng rng(seed, 0x756e69717565ULL);
  return ensure_n_unique(points, n, rng);
}

PointSet2d sample_node(const PrimitiveNode& node, Index count, Rng& rng) {
  if (count <= 0) return PointSet2d(0, 2);
  switch (node.kind) {
    case PrimitiveKind::kUniform: return sample_uniform(node, count, rng);
    case PrimitiveKind::kGrid: return sample_grid(node, count, rng);
    case PrimitiveKind::kRing: return sample_ring(node, count, rng);
    case PrimitiveKind::kClusterMixture: return sample_clusters(node, count, rng);
    case PrimitiveKind::kMotifReplicate: return sample_motifs(node, count, rng);
    case PrimitiveKind::kStripe: return sample_stripes(node, count, rng);
    case PrimitiveKind::kDropout: return sample_dropout(node, count, rng);
    case PrimitiveKind::kJitter: {
      Rng child_rng = rng.split(1);
      PointSet2d pts = sample_node(node.children.front(), count, child_rng);
      const double sigma = node.param("sigma");
      for (Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) += sigma * rng.normal();
        pts(i, 1) += sigma * rng.normal();
      }
      return pts;
    }
    case PrimitiveKind::kAffine: {
      Rng child_rng = rng.split(1);
      PointSet2d pts = sample_node(node.children.front(), count, child_rng);
      const double a = node.param("rotation");
      Eigen::Matrix2d rot;
      rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
      Eigen::Matrix2d shear;
      shear << 1.0, node.param("shear"), 0.0, 1.0;
      const Eigen::Matrix2d scale =
          Eigen::Vector2d(node.param("scale_x"), node.param("scale_y")).asDiagonal();
      const Eigen::Matrix2d map = rot * shear * scale;
      const Eigen::RowVector2d center(0.5, 0.5);
      const Eigen::RowVector2d shift(node.param("tx"), node.param("ty"));
      pts = ((pts.rowwise() - center) * map.transpose()).rowwise() + (center + shift);
      return pts;
    }
    case PrimitiveKind::kMixture: {
      const auto counts = split_count(count, node.weights);
      PointSet2d pts(count, 2);
      Index offset = 0;
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        Rng child_rng = rng.split(i + 1);
        const PointSet2d part = sample_node(node.children[i], counts[i], child_rng);
        pts.middleRows(offset, part.rows()) = part;
        offset += part.rows();
      }
      pts.conservativeResize(offset, 2);
      return pts;
    }
  }
  return PointSet2d(0, 2);
}

Point2d depot_position(CvrpScheme scheme, Rng& rng) {
  switch (scheme) {
    case CvrpScheme::kCenterDepot: return {0.5, 0.5};
    case CvrpScheme::kRandomDepot: return {rng.uniform(), rng.uniform()};
    case CvrpScheme::kCornerDepot: return {0.0, 0.0};
  }
  return {0.5, 0.5};
}

Instance sample_instance(const GeneratorProgram& program, Index n, std::uint64_t seed,
                         const CvrpParams& cvrp) {
  if (n < 2) throw Error(Errc::kInvalidArgument, "sample_instance needs n >= 2");
  if (const auto v = validate_program(program); !v.empty()) {
    std::vector<std::string> details;
    for (const auto& x : v) details.push_back(to_string(x));
    throw Error(Errc::kInvalidProgram, "program fails validation", details);
  }
  Rng base(seed, 0x696e7374616e6365ULL);
  Rng node_rng = base.split(1);
  PointSet2d raw = sample_node(program.root, n, node_rng);
  clamp_unit(raw);
  {
    std::vector<Index> perm(static_cast<std::size_t>(raw.rows()));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng order_rng = base.split(2);
    order_rng.shuffle(std::span(perm));
    PointSet2d shuffled(raw.rows(), 2);
    for (Index i = 0; i < raw.rows(); ++i) shuffled.row(i) = raw.row(perm[static_cast<std::size_t>(i)]);
    raw = std::move(shuffled);
  }
  Rng repair_rng = base.split(3);

  Instance inst;
  inst.name = std::string(to_string(program.category)) + "-" + program_hash(program).substr(0, 8) +
              "-n" + std::to_string(n) + "-s" + std::to_string(seed);
  if (program.category != ProgramCategory::kCvrp) {
    inst.kind = ProblemKind::kTsp;
    inst.nodes = ensure_n_unique(raw, n, repair_rng);
    return inst;
  }

  Rng depot_rng = base.split(4);
  CvrpScheme scheme = program.depot_scheme.value_or(
      static_cast<CvrpScheme>(depot_rng.uniform_int(0, 2)));
  const Point2d depot = depot_position(scheme, depot_rng);
  PointSet2d with_depot(raw.rows() + 1, 2);
  with_depot.row(0) = depot.transpose();
  with_depot.bottomRows(raw.rows()) = raw;

  inst.kind = ProblemKind::kCvrp;
  inst.nodes = ensure_n_unique(with_depot, n + 1, repair_rng);
  inst.depot_index = 0;
  Rng demand_rng = base.split(5);
  const auto demands = sample_demands(n, cvrp, demand_rng);
  Rng ratio_rng = base.split(6);
  const double r = sample_capacity_ratio(cvrp, ratio_rng);
  inst.capacity = compute_capacity(demands, r, cvrp);
  Eigen::VectorXd d(n + 1);
  d(0) = 0.0;
  for (Index i = 0; i < n; ++i) d(i + 1) = static_cast<double>(demands[static_cast<std::size_t>(i)]);
  inst.demands = std::move(d);
  return inst;
}

GeneratorProgram seed_program(ProgramCategory category) {
  GeneratorProgram p;
  p.category = category;
  switch (category) {
    case ProgramCategory::kS1: {
      PrimitiveNode motif{PrimitiveKind::kRing,
                          {{"cx", 0.5}, {"cy", 0.5}, {"radius", 0.45}, {"thickness", 0.0}, {"arc", 1.0}},
                          {},
                          {}};
      p.root = PrimitiveNode{PrimitiveKind::kMotifReplicate,
                             {{"copies", 10}, {"motif_scale", 0.05}, {"lattice_jitter", 0.15},
                              {"rotate", 0.0}, {"margin", 0.08}},
                             {},
                             {motif}};
      p.description = "Small ring motifs replicated on a jittered lattice: repeated geometric patterns.";
      break;
    }
    case ProgramCategory::kS2: {
      PrimitiveNode grid{PrimitiveKind::kGrid, {{"aspect", 1.0}, {"margin", 0.05}}, {}, {}};
      p.root = PrimitiveNode{PrimitiveKind::kJitter, {{"sigma", 0.004}}, {}, {grid}};
      p.description = "Regular lattice with light positional noise: grid-like, evenly spaced layout.";
      break;
    }
    case ProgramCategory::kS3: {
      PrimitiveNode clusters{PrimitiveKind::kClusterMixture,
                             {{"clusters", 6}, {"sigma", 0.035}, {"sigma_spread", 0.3},
                              {"margin", 0.1}, {"size_skew", 0.5}},
                             {},
                             {}};
      PrimitiveNode background{PrimitiveKind::kUniform, {{"margin", 0.0}}, {}, {}};
      p.root = PrimitiveNode{PrimitiveKind::kMixture, {}, {0.75, 0.25}, {clusters, background}};
      p.description = "Gaussian clusters over a uniform background: local point aggregations.";
      break;
    }
    case ProgramCategory::kCvrp: {
      p.root = PrimitiveNode{PrimitiveKind::kUniform, {{"margin", 0.0}}, {}, {}};
      p.description = "Uniform customers; depot placed by the program's depot scheme.";
      break;
    }
  }
  return p;
}

GeneratorProgram seed_program(SegmentLabel label) { return seed_program(category_of(label)); }

GeneratorProgram seed_program(CvrpScheme scheme) {
  GeneratorProgram p = seed_program(ProgramCategory::kCvrp);
  p.depot_scheme = scheme;
  return p;
}

}  // namespace routegen
