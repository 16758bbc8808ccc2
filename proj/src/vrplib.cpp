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

#include "routegen/vrplib.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "routegen/util.hpp"

namespace routegen {
namespace {

constexpr Index kMaxDimension = 10'000'000;

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\f\v");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\f\v");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(Errc::kMalformedSection,
              "line " + std::to_string(line) + ": " + what);
}

bool parse_real(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_int(std::string_view tok, std::int64_t& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool looks_numeric(std::string_view tok) {
  if (tok.empty()) return false;
  const char c = tok.front();
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
         c == '.';
}

enum class Section { kNone, kCoords, kDemands, kDepots, kUnknown };

const std::set<std::string> kHeaderKeys = {
    "NAME", "TYPE", "COMMENT", "DIMENSION", "EDGE_WEIGHT_TYPE", "CAPACITY"};

std::string format_value(double v, int precision) {
  if (std::abs(v) < 1e15 && v == std::floor(v)) {
    return std::to_string(static_cast<std::int64_t>(v));
  }
  return format_fixed(v, precision);
}

}  // namespace

Instance parse_instance(std::string_view text, std::vector<ParseWarning>* warnings) {
  auto warn = [&](std::size_t line, std::string msg) {
    if (warnings) warnings->push_back({line, std::move(msg)});
  };

  std::string name;
  std::optional<ProblemKind> kind;
  std::optional<Index> dimension;
  std::optional<std::string> edge_weight_type;
  std::optional<double> capacity;
  std::vector<std::pair<std::int64_t, Point2d>> coords;
  std::vector<std::pair<std::int64_t, double>> demand_rows;
  std::vector<std::int64_t> depots;
  bool saw_coords = false, saw_demands = false, saw_depots = false;

  Section section = Section::kNone;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;

    const auto toks = tokens(line);
    if (section != Section::kNone && looks_numeric(toks.front())) {
      if (toks.front() == "-1" && toks.size() == 1) {
        section = Section::kNone;
        continue;
      }
      switch (section) {
        case Section::kCoords: {
          std::int64_t id = 0;
          Point2d p;
          if (toks.size() != 3 || !parse_int(toks[0], id) ||
              !parse_real(toks[1], p.x()) || !parse_real(toks[2], p.y())) {
            malformed(line_no, "NODE_COORD_SECTION expects `id x y`");
          }
          coords.emplace_back(id, p);
          break;
        }
        case Section::kDemands: {
          std::int64_t id = 0;
          double d = 0;
          if (toks.size() != 2 || !parse_int(toks[0], id) || !parse_real(toks[1], d) || d < 0) {
            malformed(line_no, "DEMAND_SECTION expects `id demand` with demand >= 0");
          }
          demand_rows.emplace_back(id, d);
          break;
        }
        case Section::kDepots: {
          for (auto tok : toks) {
            std::int64_t id = 0;
            if (!parse_int(tok, id)) malformed(line_no, "DEPOT_SECTION expects node ids");
            if (id == -1) {
              section = Section::kNone;
              break;
            }
            depots.push_back(id);
          }
          break;
        }
        case Section::kUnknown:
        case Section::kNone:
          break;
      }
      continue;
    }

    // Keyword line.
    std::string_view key_part = line;
    std::string_view value;
    const auto colon = line.find(':');
    if (colon != std::string_view::npos) {
      key_part = trim(line.substr(0, colon));
      value = trim(line.substr(colon + 1));
    } else {
      key_part = toks.front();
      value = trim(line.substr(toks.front().size()));
    }
    const std::string key = upper(key_part);
    section = Section::kNone;

    if (key == "EOF") break;
    if (key == "NODE_COORD_SECTION") {
      if (saw_coords) malformed(line_no, "duplicate NODE_COORD_SECTION");
      saw_coords = true;
      section = Section::kCoords;
    } else if (key == "DEMAND_SECTION") {
      if (saw_demands) malformed(line_no, "duplicate DEMAND_SECTION");
      saw_demands = true;
      section = Section::kDemands;
    } else if (key == "DEPOT_SECTION") {
      if (saw_depots) malformed(line_no, "duplicate DEPOT_SECTION");
      saw_depots = true;
      section = Section::kDepots;
    } else if (key.ends_with("_SECTION")) {
      warn(line_no, "skipping unsupported section " + key);
      section = Section::kUnknown;
    } else if (key == "NAME") {
      name = std::string(value);
    } else if (key == "COMMENT") {
      // informational only
    } else if (key == "TYPE") {
      const auto vt = tokens(value);
      const std::string type = vt.empty() ? std::string() : upper(vt.front());
      if (type == "TSP") kind = ProblemKind::kTsp;
      else if (type == "CVRP") kind = ProblemKind::kCvrp;
      else throw Error(Errc::kUnsupportedProblemType, "TYPE " + std::string(value));
    } else if (key == "DIMENSION") {
      std::int64_t d = 0;
      if (!parse_int(value, d) || d < 1 || d > kMaxDimension) {
        malformed(line_no, "DIMENSION must be a positive integer");
      }
      dimension = d;
    } else if (key == "EDGE_WEIGHT_TYPE") {
      edge_weight_type = upper(value);
      if (*edge_weight_type != "EUC_2D") {
        throw Error(Errc::kUnsupportedEdgeWeightType, *edge_weight_type);
      }
    } else if (key == "CAPACITY") {
      double q = 0;
      if (!parse_real(value, q) || !(q > 0)) malformed(line_no, "CAPACITY must be positive");
      capacity = q;
    } else {
      warn(line_no, "ignoring unknown keyword " + key);
    }
  }

  if (!kind) throw Error(Errc::kMalformedSection, "missing TYPE");
  if (!dimension) throw Error(Errc::kMalformedSection, "missing DIMENSION");
  if (!edge_weight_type) throw Error(Errc::kMalformedSection, "missing EDGE_WEIGHT_TYPE");
  if (!saw_coords) throw Error(Errc::kMalformedSection, "missing NODE_COORD_SECTION");

  const Index n = *dimension;
  if (static_cast<Index>(coords.size()) != n) {
    throw Error(Errc::kDimensionMismatch,
                "DIMENSION " + std::to_string(n) + " but " +
                    std::to_string(coords.size()) + " coordinate lines");
  }
  if (n < 2) throw Error(Errc::kDimensionMismatch, "instance needs at least 2 nodes");

  Instance inst;
  inst.name = name;
  inst.kind = *kind;
  inst.nodes.resize(n, 2);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& [id, p] : coords) {
    if (id < 1 || id > n) {
      throw Error(Errc::kDimensionMismatch, "node id " + std::to_string(id) + " outside 1.." + std::to_string(n));
    }
    if (seen[static_cast<std::size_t>(id - 1)]) {
      throw Error(Errc::kMalformedSection, "duplicate node id " + std::to_string(id));
    }
    seen[static_cast<std::size_t>(id - 1)] = true;
    inst.nodes.row(id - 1) = p.transpose();
  }

  if (inst.kind == ProblemKind::kCvrp) {
    if (!capacity) throw Error(Errc::kMalformedSection, "CVRP requires CAPACITY");
    if (!saw_demands) throw Error(Errc::kMalformedSection, "CVRP requires DEMAND_SECTION");
    if (!saw_depots) throw Error(Errc::kMalformedSection, "CVRP requires DEPOT_SECTION");
    if (static_cast<Index>(demand_rows.size()) != n) {
      throw Error(Errc::kDimensionMismatch, "DEMAND_SECTION has " +
                      std::to_string(demand_rows.size()) + " rows for DIMENSION " + std::to_string(n));
    }
    if (depots.size() != 1) {
      throw Error(Errc::kMalformedSection, "exactly one depot supported, got " + std::to_string(depots.size()));
    }
    Eigen::VectorXd demands(n);
    std::vector<bool> dseen(static_cast<std::size_t>(n), false);
    for (const auto& [id, d] : demand_rows) {
      if (id < 1 || id > n) throw Error(Errc::kDimensionMismatch, "demand id out of range");
      if (dseen[static_cast<std::size_t>(id - 1)]) throw Error(Errc::kMalformedSection, "duplicate demand id");
      dseen[static_cast<std::size_t>(id - 1)] = true;
      demands(id - 1) = d;
    }
    const std::int64_t depot = depots.front();
    if (depot < 1 || depot > n) throw Error(Errc::kMalformedSection, "depot id out of range");
    if (demands(depot - 1) != 0.0) throw Error(Errc::kMalformedSection, "depot demand must be 0");
    inst.depot_index = depot - 1;
    inst.demands = std::move(demands);
    inst.capacity = capacity;
  } else if (saw_demands || saw_depots || capacity) {
    warn(0, "ignoring CVRP fields in TSP instance");
  }
  return inst;
}

Instance read_instance_file(const std::filesystem::path& path,
                            std::vector<ParseWarning>* warnings) {
  Instance inst = parse_instance(read_text_file(path), warnings);
  if (inst.name.empty()) inst.name = path.stem().string();
  return inst;
}

std::string write_instance(const Instance& instance, int precision) {
  instance.check();
  std::string name = instance.name;
  std::replace(name.begin(), name.end(), '\n', ' ');
  std::ostringstream out;
  out << "NAME : " << name << '\n';
  out << "TYPE : " << to_string(instance.kind) << '\n';
  out << "DIMENSION : " << instance.size() << '\n';
  out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  if (instance.is_cvrp()) {
    out << "CAPACITY : " << format_value(*instance.capacity, precision) << '\n';
  }
  out << "NODE_COORD_SECTION\n";
  for (Index i = 0; i < instance.size(); ++i) {
    out << (i + 1) << ' ' << format_fixed(instance.nodes(i, 0), precision) << ' '
        << format_fixed(instance.nodes(i, 1), precision) << '\n';
  }
  if (instance.is_cvrp()) {
    out << "DEMAND_SECTION\n";
    for (Index i = 0; i < instance.size(); ++i) {
      out << (i + 1) << ' ' << format_value((*instance.demands)(i), precision) << '\n';
    }
    out << "DEPOT_SECTION\n " << (*instance.depot_index + 1) << "\n -1\n";
  }
  out << "EOF\n";
  return out.str();
}

void write_instance_file(const std::filesystem::path& path,
                         const Instance& instance, int precision) {
  write_text_file(path, write_instance(instance, precision));
}

std::string_view instance_extension(ProblemKind kind) {
  return kind == ProblemKind::kTsp ? ".tsp" : ".vrp";
}

std::string_view to_string(SplitRole role) {
  return role == SplitRole::kValidation ? "validation" : "unseen";
}

const ManifestEntry* CorpusManifest::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<ManifestEntry> CorpusManifest::with_role(SplitRole role) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    const auto it = split.find(e.name);
    if (it != split.end() && it->second == role) out.push_back(e);
  }
  return out;
}

void CorpusManifest::check() const {
  std::set<std::string> names;
  for (const auto& e : entries) {
    if (!names.insert(e.name).second) {
      throw Error(Errc::kInvalidArgument, "duplicate manifest entry " + e.name);
    }
  }
  if (split.empty()) return;
  if (split.size() != names.size()) {
    throw Error(Errc::kInvalidArgument, "split does not cover the entry set");
  }
  for (const auto& [name, role] : split) {
    if (!names.contains(name)) {
      throw Error(Errc::kInvalidArgument, "split names unknown entry " + name);
    }
  }
}

nlohmann::json to_json(const CorpusManifest& manifest) {
  nlohmann::json doc;
  doc["seed"] = manifest.seed;
  doc["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json j;
    j["path"] = e.path;
    j["name"] = e.name;
    j["n"] = e.n;
    j["kind"] = std::string(to_string(e.kind));
    j["best_known"] = e.best_known ? nlohmann::json(*e.best_known) : nlohmann::json();
    j["segment"] = e.segment ? nlohmann::json(std::string(to_string(*e.segment))) : nlohmann::json();
    doc["entries"].push_back(std::move(j));
  }
  doc["split"] = nlohmann::json::object();
  for (const auto& [name, role] : manifest.split) {
    doc["split"][name] = std::string(to_string(role));
  }
  return doc;
}

CorpusManifest manifest_from_json(const nlohmann::json& doc) {
  try {
    CorpusManifest m;
    m.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.path = j.value("path", std::string());
      e.name = j.at("name").get<std::string>();
      e.n = j.at("n").get<Index>();
      e.kind = parse_problem_kind(j.value("kind", std::string("TSP")));
      if (j.contains("best_known") && !j["best_known"].is_null()) {
        e.best_known = j["best_known"].get<double>();
      }
      if (j.contains("segment") && !j["segment"].is_null()) {
        e.segment = parse_segment_label(j["segment"].get<std::string>());
      }
      m.entries.push_back(std::move(e));
    }
    if (doc.contains("split")) {
      for (const auto& [name, role] : doc["split"].items()) {
        const auto r = role.get<std::string>();
        if (r == "validation") m.split[name] = SplitRole::kValidation;
        else if (r == "unseen") m.split[name] = SplitRole::kUnseen;
        else throw Error(Errc::kInvalidArgument, "bad split role " + r);
      }
    }
    m.check();
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, std::string("manifest: ") + ex.what());
  }
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, path.string() + ": " + ex.what());
  }
  CorpusManifest m = manifest_from_json(doc);
  const auto base = path.parent_path();
  for (auto& e : m.entries) {
    if (!e.path.empty() && std::filesystem::path(e.path).is_relative()) {
      e.path = (base / e.path).lexically_normal().string();
    }
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  write_text_file(path, to_json(manifest).dump(2) + "\n");
}

std::map<std::string, double> load_best_known(const std::filesystem::path& path) {
  try {
    const auto doc = nlohmann::json::parse(read_text_file(path));
    std::map<std::string, double> out;
    for (const auto& [name, value] : doc.items()) out[name] = value.get<double>();
    return out;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, path.string() + ": " + ex.what());
  }
}

Corpus scan_corpus(const std::filesystem::path& dir,
                   const std::map<std::string, double>& best_known,
                   std::size_t jobs) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::kIo, "corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::recursive_directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    const auto ext = item.path().extension();
    if (ext == ".tsp" || ext == ".vrp") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(Errc::kEmptyCorpus, "no .tsp/.vrp files in " + dir.string());

  std::vector<Instance> parsed(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    try {
      parsed[i] = read_instance_file(files[i]);
    } catch (const Error& e) {
      throw Error(e.code(), files[i].string() + ": " + e.what());
    }
  });

  std::vector<std::size_t> order(files.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return parsed[a].name < parsed[b].name;
  });

  Corpus corpus;
  for (const auto i : order) {
    Instance& inst = parsed[i];
    if (auto it = best_known.find(inst.name); it != best_known.end()) {
      inst.best_known = it->second;
    }
    ManifestEntry e;
    e.path = files[i].string();
    e.name = inst.name;
    e.n = inst.size();
    e.kind = inst.kind;
    e.best_known = inst.best_known;
    corpus.manifest.entries.push_back(e);
    corpus.instances.push_back(std::move(inst));
  }
  corpus.manifest.check();
  return corpus;
}

std::vector<Instance> load_instances(const CorpusManifest& manifest, std::size_t jobs) {
  std::vector<Instance> out(manifest.entries.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    out[i] = read_instance_file(e.path);
    out[i].name = e.name;
    if (e.best_known) out[i].best_known = e.best_known;
  });
  return out;
}

CorpusManifest split_corpus(const CorpusManifest& manifest, const SplitOptions& options) {
  CorpusManifest out;
  out.seed = options.seed;
  for (const auto& e : manifest.entries) {
    if (options.size_cap && e.n >= *options.size_cap) continue;
    out.entries.push_back(e);
  }
  if (out.entries.empty()) throw Error(Errc::kEmptyCorpus, "no entries left to split");
  std::sort(out.entries.begin(), out.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.name < b.name; });

  for (const auto& e : out.entries) out.split[e.name] = SplitRole::kUnseen;

  if (!options.validation_names.empty()) {
    for (const auto& name : options.validation_names) {
      if (!out.split.contains(name)) {
        throw Error(Errc::kInvalidArgument, "validation name not in corpus: " + name);
      }
      out.split[name] = SplitRole::kValidation;
    }
    out.check();
    return out;
  }

  const double fraction = options.validation_fraction;
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(Errc::kInvalidArgument, "validation fraction must lie in (0, 1)");
  }
  const std::size_t total = out.entries.size();
  std::size_t count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(total)));
  if (options.validation_count) {
    if (*options.validation_count > total) {
      throw Error(Errc::kInvalidArgument, "validation count exceeds corpus size");
    }
    count = *options.validation_count;
  }
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(options.seed, 0x73706c6974ULL);
  rng.shuffle(std::span(order));
  for (std::size_t k = 0; k < count; ++k) {
    out.split[out.entries[order[k]].name] = SplitRole::kValidation;
  }
  out.check();
  return out;
}

CorpusManifest split_corpus(const CorpusManifest& manifest, double validation_fraction,
                            std::optional<Index> size_cap, std::uint64_t seed) {
  SplitOptions options;
  options.validation_fraction = validation_fraction;
  options.size_cap = size_cap;
  options.seed = seed;
  return split_corpus(manifest, options);
}

}  // namespace routegen
