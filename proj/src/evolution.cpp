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

#include "routegen/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "routegen/designer.hpp"
#include "routegen/util.hpp"

namespace routegen {
namespace {

constexpr PrimitiveKind kLeafKinds[] = {PrimitiveKind::kUniform, PrimitiveKind::kGrid,
                                        PrimitiveKind::kRing, PrimitiveKind::kClusterMixture,
                                        PrimitiveKind::kStripe};

void collect(PrimitiveNode& node, std::vector<PrimitiveNode*>& out) {
  out.push_back(&node);
  for (auto& c : node.children) collect(c, out);
}

void collect_const(const PrimitiveNode& node, std::vector<const PrimitiveNode*>& out) {
  out.push_back(&node);
  for (const auto& c : node.children) collect_const(c, out);
}

/// Depth of the subtree rooted at each collected node, aligned with collect().
void depths_of(const PrimitiveNode& node, int depth, std::vector<int>& out) {
  out.push_back(depth);
  for (const auto& c : node.children) depths_of(c, depth + 1, out);
}

std::string fenced(const GeneratorProgram& p) { return "```json\n" + render_program(p) + "\n```\n"; }

void perturb_param(PrimitiveNode& node, const ParamSpec& spec, Rng& rng) {
  const std::string name(spec.name);
  const double old = node.param(name);
  const double range = spec.hi - spec.lo;
  double value = old;
  if (spec.integer) {
    const double step = std::max(1.0, std::round(std::abs(rng.normal()) * 0.5 * std::max(1.0, old)));
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    value = std::clamp(old + sign * step, spec.lo, spec.hi);
    if (value == old) value = std::clamp(old - sign * step, spec.lo, spec.hi);
  } else if (spec.lo > 0.0) {
    // Positive parameters move on a log scale.
    value = std::clamp(old * std::exp(0.7 * rng.normal()), spec.lo, spec.hi);
  } else {
    value = std::clamp(old + rng.normal() * 0.15 * range, spec.lo, spec.hi);
  }
  if (value == old) value = std::clamp(old + (old > spec.lo ? -0.05 : 0.05) * range, spec.lo, spec.hi);
  node.params[name] = value;
}

std::string reflection_text(const ProgramRef& better, const ProgramRef& worse) {
  std::ostringstream out;
  out << "Pair (" << better.id << ", " << worse.id << "): keep the structure of " << better.id
      << " (root " << to_string(better.program.root.kind) << "); move away from " << worse.id
      << " (root " << to_string(worse.program.root.kind) << ").";
  return out.str();
}

std::string merge_reflections(const std::vector<std::string>& texts) {
  std::vector<std::string> lines;
  std::set<std::string> seen;
  for (const auto& t : texts) {
    std::istringstream in(t);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || !seen.insert(line).second) continue;
      lines.push_back(line);
    }
  }
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

nlohmann::json event(std::size_t& seq, int iteration, std::string_view kind) {
  return {{"seq", seq++}, {"iteration", iteration}, {"event", std::string(kind)}};
}

}  // namespace

std::string_view to_string(DesignerOp op) {
  switch (op) {
    case DesignerOp::kInit: return "init";
    case DesignerOp::kReflect: return "reflect";
    case DesignerOp::kCrossover: return "crossover";
    case DesignerOp::kLongReflect: return "long_reflect";
    case DesignerOp::kMutate: return "mutate";
  }
  return "init";
}

GeneratorProgram mutate_one_node(const GeneratorProgram& program, Rng& rng) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    GeneratorProgram out = program;
    std::vector<PrimitiveNode*> nodes;
    collect(out.root, nodes);
    PrimitiveNode& node = *nodes[rng.index(nodes.size())];
    const KindSpec& spec = kind_spec(node.kind);
    if (node.children.empty() && rng.bernoulli(0.15)) {
      PrimitiveKind next = node.kind;
      while (next == node.kind) next = kLeafKinds[rng.index(std::size(kLeafKinds))];
      node.kind = next;
      node.params.clear();
    } else if (node.kind == PrimitiveKind::kMixture) {
      if (node.weights.empty()) continue;
      double& w = node.weights[rng.index(node.weights.size())];
      w = std::clamp(w * std::exp(0.5 * rng.normal()), 1e-3, 1e3);
    } else if (!spec.params.empty()) {
      perturb_param(node, spec.params[rng.index(spec.params.size())], rng);
    } else {
      continue;
    }
    if (out != program && validate_program(out).empty()) return out;
  }
  return program;
}

GeneratorProgram subtree_crossover(const GeneratorProgram& a, const GeneratorProgram& b, Rng& rng) {
  std::vector<const PrimitiveNode*> donors;
  collect_const(b.root, donors);
  for (int attempt = 0; attempt < 8; ++attempt) {
    GeneratorProgram child = a;
    std::vector<PrimitiveNode*> slots;
    collect(child.root, slots);
    std::vector<int> depths;
    depths_of(child.root, 1, depths);
    const std::size_t s = rng.index(slots.size());
    const PrimitiveNode& donor = *donors[rng.index(donors.size())];
    if (depths[s] - 1 + program_depth(donor) > kMaxProgramDepth) continue;
    *slots[s] = donor;
    if (child != a && validate_program(child).empty()) return child;
  }
  return mutate_one_node(a, rng);
}

DesignerResponse MockDesigner::complete(const DesignerRequest& request) {
  Rng rng(request.seed, 0x6d6f636bULL);
  DesignerResponse response;
  response.metadata = {{"designer", "mock"}, {"request_id", request.request_id}};
  switch (request.op) {
    case DesignerOp::kInit: {
      GeneratorProgram p = request.programs.empty() ? seed_program(request.category)
                                                    : request.programs.front().program;
      const int edits = 2 + request.init_index % 5;
      for (int e = 0; e < edits; ++e) p = mutate_one_node(p, rng);
      p.description = "Variant " + std::to_string(request.init_index) + " of the seed generator.";
      response.text = fenced(p);
      break;
    }
    case DesignerOp::kReflect: {
      const auto& x = request.programs.at(0);
      const auto& y = request.programs.at(1);
      const bool x_better = x.fitness.value_or(INFINITY) <= y.fitness.value_or(INFINITY);
      response.text = x_better ? reflection_text(x, y) : reflection_text(y, x);
      break;
    }
    case DesignerOp::kCrossover: {
      GeneratorProgram child =
          subtree_crossover(request.programs.at(0).program, request.programs.at(1).program, rng);
      child.description = "Offspring of " + request.programs[0].id + " and " + request.programs[1].id + ".";
      response.text = fenced(child);
      break;
    }
    case DesignerOp::kLongReflect:
      response.text = merge_reflections(request.texts);
      break;
    case DesignerOp::kMutate: {
      GeneratorProgram child = mutate_one_node(request.programs.at(0).program, rng);
      response.text = fenced(child);
      break;
    }
  }
  return response;
}

nlohmann::json to_json(const Individual& ind) {
  nlohmann::json j;
  j["id"] = ind.id;
  j["hash"] = ind.hash;
  j["fitness"] = ind.fitness ? nlohmann::json(*ind.fitness) : nlohmann::json(nullptr);
  if (ind.report) j["report"] = to_json(*ind.report);
  j["parents"] = ind.parent_ids;
  j["birth_iteration"] = ind.birth_iteration;
  j["origin"] = ind.origin;
  j["program"] = to_json(ind.program);
  return j;
}

void EvolutionConfig::check() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(Errc::kInvalidArgument, std::string(name) + " must be positive");
  };
  positive(init_population, "init_population");
  positive(offspring_per_iteration, "offspring_per_iteration");
  positive(max_iterations, "max_iterations");
  positive(max_evaluations, "max_evaluations");
  positive(stagnation_limit, "stagnation_limit");
  positive(init_attempts, "init_attempts");
  positive(jobs, "jobs");
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::kInvalidArgument, std::string(name) + " must be in [0, 1]");
  };
  rate(crossover_rate, "crossover_rate");
  rate(mutation_rate, "mutation_rate");
  if (!(temperature >= 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be >= 0");
}

nlohmann::json to_json(const EvolutionConfig& c) {
  return {{"init_population", c.init_population},
          {"offspring_per_iteration", c.offspring_per_iteration},
          {"crossover_rate", c.crossover_rate},
          {"mutation_rate", c.mutation_rate},
          {"max_iterations", c.max_iterations},
          {"max_evaluations", c.max_evaluations},
          {"stagnation_limit", c.stagnation_limit},
          {"seed", c.seed},
          {"temperature", c.temperature},
          {"init_attempts", c.init_attempts}};
}

EvolutionConfig evolution_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Errc::kInvalidArgument, "evolution config must be an object");
  EvolutionConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "init_population") c.init_population = value.get<std::size_t>();
      else if (key == "offspring_per_iteration") c.offspring_per_iteration = value.get<std::size_t>();
      else if (key == "crossover_rate") c.crossover_rate = value.get<double>();
      else if (key == "mutation_rate") c.mutation_rate = value.get<double>();
      else if (key == "max_iterations") c.max_iterations = value.get<std::size_t>();
      else if (key == "max_evaluations") c.max_evaluations = value.get<std::size_t>();
      else if (key == "stagnation_limit") c.stagnation_limit = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "init_attempts") c.init_attempts = value.get<std::size_t>();
      else if (key == "jobs") c.jobs = value.get<std::size_t>();
      else throw Error(Errc::kInvalidArgument, "unknown evolution config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, std::string("evolution config: ") + ex.what());
  }
  c.check();
  return c;
}

bool ranks_before(const Individual& a, const Individual& b) {
  const double fa = a.fitness.value_or(INFINITY), fb = b.fitness.value_or(INFINITY);
  if (fa != fb) return fa < fb;
  if (a.birth_iteration != b.birth_iteration) return a.birth_iteration < b.birth_iteration;
  if (a.hash != b.hash) return a.hash < b.hash;
  return a.id < b.id;
}

Population rank_select(const Population& population, std::size_t capacity, std::uint64_t seed) {
  for (const auto& m : population.members) {
    if (!m.fitness) throw Error(Errc::kUnevaluatedMember, "member " + m.id + " has no fitness");
  }
  if (capacity == 0) throw Error(Errc::kInvalidArgument, "rank_select needs capacity >= 1");
  std::vector<Individual> ranked = population.members;
  std::sort(ranked.begin(), ranked.end(), ranks_before);
  Population out;
  out.capacity = capacity;
  if (ranked.size() <= capacity) {
    out.members = std::move(ranked);
    return out;
  }
  const std::size_t n = ranked.size();
  out.members.push_back(ranked.front());
  // Remaining candidates with linear-rank weights N - rank + 1 (rank 1 = best).
  std::vector<std::size_t> pool;
  std::vector<double> weights;
  for (std::size_t r = 1; r < n; ++r) {
    pool.push_back(r);
    weights.push_back(static_cast<double>(n - r));
  }
  Rng rng(seed, 0x72616e6bULL);
  std::vector<std::size_t> chosen;
  while (chosen.size() + 1 < capacity) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = rng.uniform() * total;
    std::size_t k = 0;
    for (; k + 1 < weights.size(); ++k) {
      if (u < weights[k]) break;
      u -= weights[k];
    }
    chosen.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t r : chosen) out.members.push_back(ranked[r]);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_members(std::size_t count, Rng& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < count; i += 2) pairs.emplace_back(order[i], order[i + 1]);
  return pairs;
}

std::vector<double> EvolutionReport::best_fitness_sequence() const {
  std::vector<double> out;
  for (const auto& it : iterations) out.push_back(it.best_fitness);
  return out;
}

nlohmann::json to_json(const EvolutionReport& r) {
  nlohmann::json j;
  j["category"] = std::string(to_string(r.category));
  j["config"] = to_json(r.config);
  j["best"] = r.best ? to_json(*r.best) : nlohmann::json(nullptr);
  j["evaluations"] = r.evaluations;
  j["stop_reason"] = r.stop_reason;
  j["iterations"] = nlohmann::json::array();
  for (const auto& it : r.iterations) {
    j["iterations"].push_back({{"iteration", it.iteration},
                               {"best_fitness", it.best_fitness},
                               {"best_id", it.best_id},
                               {"evaluations", it.evaluations},
                               {"mutation_fired", it.mutation_fired},
                               {"new_members", it.new_members},
                               {"population", it.population}});
  }
  j["lineage"] = nlohmann::json::array();
  for (const auto& ind : r.lineage) j["lineage"].push_back(to_json(ind));
  j["failures"] = nlohmann::json::array();
  for (const auto& f : r.failures) {
    j["failures"].push_back({{"iteration", f.iteration}, {"stage", f.stage},
                             {"message", f.message}, {"details", f.details}});
  }
  nlohmann::json shorts = nlohmann::json::array();
  for (const auto& s : r.memory.short_term) {
    shorts.push_back({{"better", s.better_id}, {"worse", s.worse_id}, {"text", s.text}});
  }
  j["memory"] = {{"short_term", shorts},
                 {"long_term", r.memory.long_term},
                 {"long_term_iteration", r.memory.long_term_iteration}};
  return j;
}

void write_run_artifacts(const EvolutionReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "iterations");
  write_text_file(dir / "config.json", to_json(report.config).dump(2) + "\n");
  write_text_file(dir / "report.json", to_json(report).dump(2) + "\n");
  std::string events;
  for (const auto& e : report.events) events += e.dump() + "\n";
  write_text_file(dir / "events.jsonl", events);
  if (report.best) write_text_file(dir / "best_program.json", render_program(report.best->program) + "\n");
  std::map<std::string, const Individual*> by_id;
  for (const auto& ind : report.lineage) by_id[ind.id] = &ind;
  for (const auto& it : report.iterations) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "iter_%02d", it.iteration);
    nlohmann::json pop = nlohmann::json::array();
    for (const auto& id : it.population) pop.push_back(to_json(*by_id.at(id)));
    write_text_file(dir / "iterations" / (std::string(stem) + "_population.json"), pop.dump(2) + "\n");
    write_text_file(dir / "iterations" / (std::string(stem) + "_best.json"),
                    render_program(by_id.at(it.best_id)->program) + "\n");
  }
}

namespace {

/// Mutable state of one run; owned by evolve().
class Run {
 public:
  Run(const EvolutionConfig& config, Designer& designer, const FitnessFn& fitness,
      ProgramCategory category)
      : config_(config), designer_(designer), fitness_(fitness), category_(category),
        fitness_seed_(derive_seed(config.seed, 0x666974ULL)) {
    report_.category = category;
    report_.config = config;
  }

  EvolutionReport run(const GeneratorProgram& seed);

 private:
  DesignerRequest make_request(DesignerOp op) {
    DesignerRequest r;
    r.op = op;
    r.category = category_;
    r.request_id = next_request_++;
    r.seed = derive_seed(config_.seed, 0x64657369676eULL + r.request_id);
    r.temperature = config_.temperature;
    return r;
  }

  ProgramRef ref(const Individual& ind) const { return {ind.id, ind.program, ind.fitness}; }

  std::vector<DesignerResponse> call_all(const std::vector<DesignerRequest>& requests) {
    std::vector<DesignerResponse> out(requests.size());
    parallel_for(requests.size(), config_.jobs,
                 [&](std::size_t i) { out[i] = designer_.complete(requests[i]); });
    return out;
  }

  void fail(int iteration, std::string stage, const Error& e) {
    report_.failures.push_back({iteration, std::move(stage), e.what(), e.details()});
    auto ev = event(seq_, iteration, "failure");
    ev["stage"] = report_.failures.back().stage;
    ev["message"] = e.what();
    report_.events.push_back(std::move(ev));
  }

  /// Parses a designer answer into a new individual, or records a failure.
  std::optional<Individual> adopt(const DesignerResponse& response, int iteration, std::string origin,
                                  std::vector<std::string> parents) {
    try {
      GeneratorProgram program = extract_program(response.text);
      if (program.category != category_) {
        throw Error(Errc::kInvalidProgram, "designer changed the category to " +
                                               std::string(to_string(program.category)));
      }
      Individual ind;
      ind.program = std::move(program);
      ind.hash = program_hash(ind.program);
      if (seen_hashes_.contains(ind.hash)) {
        throw Error(Errc::kInvalidProgram, "duplicate of an existing program " + ind.hash);
      }
      seen_hashes_.insert(ind.hash);
      ind.id = "g" + std::to_string(iteration) + "-" + std::to_string(next_member_[iteration]++);
      ind.birth_iteration = iteration;
      ind.origin = std::move(origin);
      ind.parent_ids = std::move(parents);
      auto ev = event(seq_, iteration, "birth");
      ev["id"] = ind.id;
      ev["origin"] = ind.origin;
      ev["parents"] = ind.parent_ids;
      ev["hash"] = ind.hash;
      report_.events.push_back(std::move(ev));
      return ind;
    } catch (const Error& e) {
      fail(iteration, origin, e);
      return std::nullopt;
    }
  }

  /// Evaluates within the remaining budget; returns the evaluated members.
  std::vector<Individual> evaluate(std::vector<Individual> fresh, int iteration) {
    const std::size_t left = config_.max_evaluations - report_.evaluations;
    if (fresh.size() > left) {
      for (std::size_t i = left; i < fresh.size(); ++i) {
        fail(iteration, "evaluate", Error(Errc::kResourceExhausted, "evaluation budget spent before " + fresh[i].id));
        report_.lineage.push_back(fresh[i]);
      }
      fresh.resize(left);
    }
    std::vector<std::optional<FitnessReport>> reports(fresh.size());
    std::vector<std::string> errors(fresh.size());
    parallel_for(fresh.size(), config_.jobs, [&](std::size_t i) {
      try {
        FitnessReport r = fitness_(fresh[i].program, fitness_seed_);
        if (!std::isfinite(r.score)) throw Error(Errc::kInvalidArgument, "non-finite fitness");
        reports[i] = std::move(r);
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    });
    report_.evaluations += fresh.size();
    std::vector<Individual> out;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      auto ev = event(seq_, iteration, "evaluate");
      ev["id"] = fresh[i].id;
      if (reports[i]) {
        fresh[i].fitness = reports[i]->score;
        fresh[i].report = reports[i];
        ev["fitness"] = reports[i]->score;
        out.push_back(fresh[i]);
      } else {
        ev["error"] = errors[i];
        report_.failures.push_back({iteration, "evaluate", errors[i], {}});
      }
      report_.events.push_back(std::move(ev));
      report_.lineage.push_back(fresh[i]);
    }
    return out;
  }

  void record_iteration(int iteration, bool mutation_fired, std::size_t new_members) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.best_id = population_.members.front().id;
    rec.best_fitness = *population_.members.front().fitness;
    rec.evaluations = report_.evaluations;
    rec.mutation_fired = mutation_fired;
    rec.new_members = new_members;
    for (const auto& m : population_.members) rec.population.push_back(m.id);
    report_.iterations.push_back(rec);
    report_.best = population_.members.front();
  }

  void initialize(const GeneratorProgram& seed);
  bool step(int iteration);

  const EvolutionConfig& config_;
  Designer& designer_;
  const FitnessFn& fitness_;
  ProgramCategory category_;
  std::uint64_t fitness_seed_;
  EvolutionReport report_;
  Population population_;
  std::set<std::string> seen_hashes_;
  std::map<int, std::size_t> next_member_;
  std::uint64_t next_request_ = 0;
  std::size_t seq_ = 0;
};

void Run::initialize(const GeneratorProgram& seed) {
  report_.events.push_back(event(seq_, 0, "init"));
  std::vector<Individual> fresh;
  for (std::size_t slot = 0; slot < config_.init_population; ++slot) {
    bool filled = false;
    for (std::size_t attempt = 0; attempt < config_.init_attempts && !filled; ++attempt) {
      DesignerRequest req = make_request(DesignerOp::kInit);
      req.init_index = static_cast<int>(slot);
      req.programs.push_back({"seed", seed, std::nullopt});
      const DesignerResponse resp = designer_.complete(req);
      if (auto ind = adopt(resp, 0, "init", {})) {
        fresh.push_back(std::move(*ind));
        filled = true;
      }
    }
    if (!filled) {
      fail(0, "init", Error(Errc::kInvalidProgram, "init slot " + std::to_string(slot) + " skipped"));
    }
  }
  population_.members = evaluate(std::move(fresh), 0);
  population_.capacity = population_.members.size();
  std::sort(population_.members.begin(), population_.members.end(), ranks_before);
}

bool Run::step(int iteration) {
  Rng rng(derive_seed(config_.seed, 0x69746572ULL + static_cast<std::uint64_t>(iteration)));
  auto& members = population_.members;

  // Short-term reflection over random pairs of the current members.
  const auto pairs = pair_members(members.size(), rng);
  std::vector<DesignerRequest> reflect_reqs;
  std::vector<std::pair<const Individual*, const Individual*>> ordered;
  for (const auto& [i, j] : pairs) {
    const Individual* better = &members[i];
    const Individual* worse = &members[j];
    if (ranks_before(*worse, *better)) std::swap(better, worse);
    ordered.emplace_back(better, worse);
    DesignerRequest req = make_request(DesignerOp::kReflect);
    req.programs = {ref(*better), ref(*worse)};
    reflect_reqs.push_back(std::move(req));
  }
  const auto reflections = call_all(reflect_reqs);
  std::vector<std::string> new_shorts;
  for (std::size_t p = 0; p < ordered.size(); ++p) {
    report_.memory.short_term.push_back({ordered[p].first->id, ordered[p].second->id, reflections[p].text});
    new_shorts.push_back(reflections[p].text);
    auto ev = event(seq_, iteration, "reflect");
    ev["pair"] = {ordered[p].first->id, ordered[p].second->id};
    report_.events.push_back(std::move(ev));
  }

  // Crossover, one attempt per pair with probability crossover_rate.
  std::vector<DesignerRequest> cross_reqs;
  std::vector<std::size_t> cross_pairs;
  for (std::size_t p = 0; p < ordered.size(); ++p) {
    if (!rng.bernoulli(config_.crossover_rate)) continue;
    DesignerRequest req = make_request(DesignerOp::kCrossover);
    req.programs = {ref(*ordered[p].first), ref(*ordered[p].second)};
    req.texts = {reflections[p].text};
    cross_reqs.push_back(std::move(req));
    cross_pairs.push_back(p);
  }
  const auto cross_resps = call_all(cross_reqs);
  std::vector<Individual> fresh;
  for (std::size_t k = 0; k < cross_resps.size(); ++k) {
    const auto& pr = ordered[cross_pairs[k]];
    auto ev = event(seq_, iteration, "crossover");
    ev["parents"] = {pr.first->id, pr.second->id};
    report_.events.push_back(std::move(ev));
    if (auto child = adopt(cross_resps[k], iteration, "crossover", {pr.first->id, pr.second->id})) {
      fresh.push_back(std::move(*child));
    }
  }

  // Long-term reflection, at most once per iteration.
  if (!new_shorts.empty()) {
    DesignerRequest req = make_request(DesignerOp::kLongReflect);
    req.texts.push_back(report_.memory.long_term);
    for (auto& s : new_shorts) req.texts.push_back(s);
    report_.memory.long_term = designer_.complete(req).text;
    report_.memory.long_term_iteration = iteration;
    report_.events.push_back(event(seq_, iteration, "long_reflect"));
  }

  // Mutation of the current best, guided by the long-term reflection.
  const bool fire = rng.bernoulli(config_.mutation_rate);
  if (fire) {
    const Individual& best = members.front();
    DesignerRequest req = make_request(DesignerOp::kMutate);
    req.programs = {ref(best)};
    req.texts = {report_.memory.long_term};
    auto ev = event(seq_, iteration, "mutate");
    ev["parent"] = best.id;
    report_.events.push_back(std::move(ev));
    if (auto child = adopt(designer_.complete(req), iteration, "mutation", {best.id})) {
      fresh.push_back(std::move(*child));
    }
  }

  // Late selection: new members join before truncation.
  const std::size_t born = fresh.size();
  auto evaluated = evaluate(std::move(fresh), iteration);
  const std::size_t joined = evaluated.size();
  for (auto& ind : evaluated) members.push_back(std::move(ind));
  const std::size_t capacity = std::min(config_.offspring_per_iteration, members.size());
  population_ = rank_select(population_, capacity,
                            derive_seed(config_.seed, 0x73656c656374ULL + static_cast<std::uint64_t>(iteration)));
  auto ev = event(seq_, iteration, "select");
  ev["capacity"] = capacity;
  ev["survivors"] = nlohmann::json::array();
  for (const auto& m : population_.members) ev["survivors"].push_back(m.id);
  report_.events.push_back(std::move(ev));
  record_iteration(iteration, fire, joined);
  return born > 0 || joined > 0;
}

EvolutionReport Run::run(const GeneratorProgram& seed) {
  config_.check();
  try {
    initialize(seed);
  } catch (const Error& e) {
    if (e.code() != Errc::kDesignerUnavailable) throw;
    fail(0, "init", e);
    report_.stop_reason = "designer_unavailable";
    return std::move(report_);
  }
  if (population_.members.empty()) {
    report_.stop_reason = "empty_population";
    return std::move(report_);
  }
  record_iteration(0, false, population_.members.size());

  std::size_t stagnant = 0;
  double best = *population_.members.front().fitness;
  report_.stop_reason = "max_iterations";
  for (std::size_t it = 1; it <= config_.max_iterations; ++it) {
    if (report_.evaluations >= config_.max_evaluations) {
      report_.stop_reason = "max_evaluations";
      break;
    }
    if (population_.members.size() < 2) {
      report_.stop_reason = "population_too_small";
      break;
    }
    try {
      step(static_cast<int>(it));
    } catch (const Error& e) {
      if (e.code() != Errc::kDesignerUnavailable) throw;
      fail(static_cast<int>(it), "designer", e);
      report_.stop_reason = "designer_unavailable";
      break;
    }
    const double now = report_.iterations.back().best_fitness;
    if (now < best) {
      best = now;
      stagnant = 0;
    } else if (++stagnant >= config_.stagnation_limit) {
      report_.stop_reason = "stagnation";
      break;
    }
  }
  auto ev = event(seq_, static_cast<int>(report_.iterations.size()) - 1, "stop");
  ev["reason"] = report_.stop_reason;
  report_.events.push_back(std::move(ev));
  return std::move(report_);
}

}  // namespace

EvolutionReport evolve(const EvolutionConfig& config, Designer& designer, const FitnessFn& fitness,
                       ProgramCategory category, const std::optional<GeneratorProgram>& seed) {
  Run run(config, designer, fitness, category);
  return run.run(seed.value_or(seed_program(category)));
}

}  // namespace routegen
