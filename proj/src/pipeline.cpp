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

#include "routegen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "routegen/solvers.hpp"
#include "routegen/util.hpp"

namespace routegen {
namespace {

constexpr int kEmitPrecision = 6;

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double r = std::round(v * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

nlohmann::json reference_label(const Instance& inst) {
  const SolveResult res = solve_instance(inst);
  return {{"objective", res.objective},
          {"solver", inst.is_cvrp() ? "savings+2opt" : "nearest-neighbor+2opt"},
          {"optimal", false},
          {"routes", res.routes}};
}

template <typename F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, Error(Errc::kIo, e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw StageError(stage, Error(Errc::kInvalidArgument, e.what()));
  }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

void BatchSchedule::check() const {
  if (rules.empty()) throw Error(Errc::kInvalidArgument, "batch schedule " + name + " has no rules");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].lo < 0 || rules[i].hi <= rules[i].lo || rules[i].batch == 0) {
      throw Error(Errc::kInvalidArgument, "batch schedule " + name + ": bad rule " + std::to_string(i));
    }
    if (i > 0 && rules[i].lo < rules[i - 1].hi) {
      throw Error(Errc::kInvalidArgument, "batch schedule " + name + ": rules overlap or are unordered");
    }
  }
}

std::size_t BatchSchedule::batch_size(Index n) const {
  for (const auto& r : rules) {
    if (n >= r.lo && n < r.hi) return r.batch;
  }
  throw Error(Errc::kScheduleGap, "size " + std::to_string(n) + " is not covered by schedule " + name);
}

BatchSchedule BatchSchedule::pomo_tsp() { return {"pomo_tsp", {{0, 500, 4}, {500, 750, 2}, {750, 1002, 1}}}; }
BatchSchedule BatchSchedule::pomo_cvrp() { return {"pomo_cvrp", {{0, 500, 4}, {500, 650, 2}, {650, 800, 1}}}; }
BatchSchedule BatchSchedule::lehd_tsp() { return {"lehd_tsp", {{0, std::numeric_limits<Index>::max(), 4}}}; }
BatchSchedule BatchSchedule::lehd_cvrp() { return {"lehd_cvrp", {{0, std::numeric_limits<Index>::max(), 16}}}; }

BatchSchedule BatchSchedule::preset(std::string_view name) {
  if (name == "pomo_tsp") return pomo_tsp();
  if (name == "pomo_cvrp") return pomo_cvrp();
  if (name == "lehd_tsp") return lehd_tsp();
  if (name == "lehd_cvrp") return lehd_cvrp();
  throw Error(Errc::kInvalidArgument, "unknown batch schedule " + std::string(name));
}

nlohmann::json to_json(const BatchSchedule& s) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : s.rules) rules.push_back({{"lo", r.lo}, {"hi", r.hi}, {"batch", r.batch}});
  return {{"name", s.name}, {"rules", rules}};
}

BatchSchedule batch_schedule_from_json(const nlohmann::json& doc) {
  if (doc.is_string()) return BatchSchedule::preset(doc.get<std::string>());
  if (!doc.is_object() || !doc.contains("rules")) {
    throw Error(Errc::kInvalidArgument, "batch schedule must be a preset name or an object with rules");
  }
  BatchSchedule s;
  s.name = doc.value("name", std::string("custom"));
  for (const auto& r : doc["rules"]) {
    s.rules.push_back({r.at("lo").get<Index>(), r.at("hi").get<Index>(), r.at("batch").get<std::size_t>()});
  }
  s.check();
  return s;
}

std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> out(weights.size(), 0);
  if (sum == 0) {
    if (total == 0) return out;
    throw Error(Errc::kInvalidArgument, "apportion needs a positive weight");
  }
  // Exact integer arithmetic: quota_i = total * w_i / sum.
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(total) * weights[i];
    out[i] = static_cast<std::size_t>(prod / sum);
    remainders.emplace_back(static_cast<std::size_t>(prod % sum), i);
    assigned += out[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[remainders[k].second];
  return out;
}

ProgramCategory entry_category(const ManifestEntry& entry) {
  if (entry.kind == ProblemKind::kCvrp) return ProgramCategory::kCvrp;
  if (!entry.segment) throw Error(Errc::kInvalidArgument, "validation entry " + entry.name + " has no segment label");
  return category_of(*entry.segment);
}

Instance round_instance(const Instance& instance, int decimals) {
  Instance out = instance;
  out.nodes = instance.nodes.unaryExpr([decimals](double v) { return round_to(v, decimals); });
  if (out.demands) *out.demands = out.demands->unaryExpr([decimals](double v) { return round_to(v, decimals); });
  if (out.capacity) *out.capacity = round_to(*out.capacity, decimals);
  return out;
}

Phase1Result emit_phase1(const std::map<ProgramCategory, GeneratorProgram>& programs,
                         const CorpusManifest& manifest, const Phase1Options& options,
                         const std::filesystem::path& out_dir) {
  constexpr std::array<ProgramCategory, 4> kOrder = {ProgramCategory::kS1, ProgramCategory::kS2,
                                                     ProgramCategory::kS3, ProgramCategory::kCvrp};
  std::vector<std::size_t> label_counts(kOrder.size(), 0);
  for (const auto& e : manifest.with_role(SplitRole::kValidation)) {
    const auto c = entry_category(e);
    ++label_counts[static_cast<std::size_t>(std::find(kOrder.begin(), kOrder.end(), c) - kOrder.begin())];
  }
  const auto counts = apportion(options.total, label_counts);
  for (std::size_t k = 0; k < kOrder.size(); ++k) {
    if (counts[k] > 0 && !programs.contains(kOrder[k])) {
      throw Error(Errc::kMissingCategoryProgram,
                  "no program for category " + std::string(to_string(kOrder[k])));
    }
  }

  struct Job {
    ProgramCategory category;
    std::size_t index;  // global
    std::string stem;
  };
  std::vector<Job> jobs;
  const std::size_t width = std::max<std::size_t>(4, std::to_string(options.total).size());
  for (std::size_t k = 0; k < kOrder.size(); ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i) {
      const std::size_t global = jobs.size();
      jobs.push_back({kOrder[k], global, std::string(to_string(kOrder[k])) + "_" + padded(i, width)});
    }
  }

  std::filesystem::create_directories(out_dir / "instances");
  Phase1Result result;
  std::vector<nlohmann::json> sidecars(jobs.size());
  result.files.resize(jobs.size());
  parallel_for(jobs.size(), options.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    const GeneratorProgram& program = programs.at(job.category);
    const std::uint64_t seed = derive_seed(options.seed, job.index);
    Instance inst = round_instance(sample_instance(program, options.n, seed), kEmitPrecision);
    inst.name = job.stem;
    const std::string file = "instances/" + job.stem + std::string(instance_extension(inst.kind));
    write_instance_file(out_dir / file, inst, kEmitPrecision);
    nlohmann::json side = {{"name", job.stem},
                           {"category", std::string(to_string(job.category))},
                           {"program_hash", program_hash(program)},
                           {"seed", seed},
                           {"n", options.n},
                           {"file", file}};
    if (options.with_labels) side["reference"] = reference_label(inst);
    write_text_file(out_dir / "instances" / (job.stem + ".json"), side.dump(2) + "\n");
    sidecars[j] = std::move(side);
    result.files[j] = file;
  });
  nlohmann::json doc;
  doc["total"] = options.total;
  doc["n"] = options.n;
  doc["seed"] = options.seed;
  doc["counts"] = nlohmann::json::object();
  for (std::size_t k = 0; k < kOrder.size(); ++k) {
    if (label_counts[k] == 0 && counts[k] == 0) continue;
    doc["counts"][std::string(to_string(kOrder[k]))] = counts[k];
    result.counts[kOrder[k]] = counts[k];
  }
  doc["programs"] = nlohmann::json::object();
  for (const auto& [cat, p] : programs) doc["programs"][std::string(to_string(cat))] = program_hash(p);
  doc["instances"] = sidecars;
  write_text_file(out_dir / "manifest.json", doc.dump(2) + "\n");
  return result;
}

std::vector<Phase2Batch> emit_phase2(const CorpusManifest& manifest,
                                     const std::vector<Instance>& instances,
                                     const BatchSchedule& schedule, std::uint64_t seed,
                                     const std::filesystem::path& out_dir) {
  schedule.check();
  if (instances.size() != manifest.entries.size()) {
    throw Error(Errc::kInvalidArgument, "emit_phase2: instances do not match the manifest");
  }
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto it = manifest.split.find(manifest.entries[i].name);
    if (it != manifest.split.end() && it->second == SplitRole::kValidation) members.push_back(i);
  }
  // Check coverage before writing anything.
  for (std::size_t i : members) schedule.batch_size(instances[i].size());
  Rng rng(seed, 0x706861736532ULL);
  rng.shuffle(std::span(members));

  std::vector<Phase2Batch> batches;
  const std::size_t width = std::max<std::size_t>(4, std::to_string(members.size()).size());
  nlohmann::json listing = nlohmann::json::array();
  for (std::size_t b = 0; b < members.size(); ++b) {
    const Instance& source = instances[members[b]];
    const Instance inst = round_instance(source, kEmitPrecision);
    Phase2Batch batch;
    batch.instance = source.name;
    batch.n = source.size();
    batch.batch_size = schedule.batch_size(batch.n);
    const std::string dir = "batches/batch_" + padded(b, width);
    std::filesystem::create_directories(out_dir / dir);
    for (std::size_t r = 0; r < batch.batch_size; ++r) {
      const std::string file =
          dir + "/" + source.name + "_r" + std::to_string(r) + std::string(instance_extension(inst.kind));
      write_instance_file(out_dir / file, inst, kEmitPrecision);
      batch.files.push_back(file);
    }
    listing.push_back({{"batch", b},
                       {"instance", batch.instance},
                       {"n", batch.n},
                       {"batch_size", batch.batch_size},
                       {"files", batch.files}});
    batches.push_back(std::move(batch));
  }
  nlohmann::json doc = {{"schedule", to_json(schedule)}, {"seed", seed}, {"batches", listing}};
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "manifest.json", doc.dump(2) + "\n");
  return batches;
}

SegmentThresholds calibrate_from_seeds(std::size_t samples, Index n, std::uint64_t seed, std::size_t jobs) {
  if (samples < 1) throw Error(Errc::kInvalidArgument, "calibration needs samples >= 1");
  std::vector<LabeledStats> labeled;
  for (SegmentLabel label : {SegmentLabel::kS1, SegmentLabel::kS2, SegmentLabel::kS3}) {
    const auto stats = sample_stats(seed_program(label), n, samples,
                                    derive_seed(seed, static_cast<std::uint64_t>(label)), jobs);
    for (const auto& s : stats) labeled.push_back({s, label});
  }
  return calibrate_thresholds(labeled);
}

void PipelineConfig::check() const {
  if (corpus.empty() && manifest.empty()) {
    throw Error(Errc::kInvalidArgument, "config needs a corpus directory or a manifest");
  }
  if (output.empty()) throw Error(Errc::kInvalidArgument, "config needs an output directory");
  thresholds.check();
  evolution.check();
  if (designer) designer->check();
  if (!mock_designer && !designer) {
    throw Error(Errc::kInvalidArgument, "config needs a designer section or the mock designer");
  }
  if (fitness.n < 2) throw Error(Errc::kInvalidArgument, "fitness.n must be >= 2");
  if (!fitness.external && fitness.samples < kMinFitnessSamples) {
    throw Error(Errc::kInvalidArgument, "fitness.samples must be >= " + std::to_string(kMinFitnessSamples));
  }
  if (phase1.n < 2) throw Error(Errc::kInvalidArgument, "phase1.n must be >= 2");
  if (jobs < 1) throw Error(Errc::kInvalidArgument, "jobs must be >= 1");
  phase2.check();
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(Errc::kInvalidArgument, "config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "corpus") c.corpus = resolve(v.get<std::string>(), base_dir);
      else if (key == "manifest") c.manifest = resolve(v.get<std::string>(), base_dir);
      else if (key == "best_known") c.best_known = resolve(v.get<std::string>(), base_dir);
      else if (key == "output") c.output = resolve(v.get<std::string>(), base_dir);
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "jobs") c.jobs = v.get<std::size_t>();
      else if (key == "mock_designer") c.mock_designer = v.get<bool>();
      else if (key == "thresholds") {
        c.thresholds.fft_threshold = v.at("fft").get<double>();
        c.thresholds.nn_threshold = v.at("nn").get<double>();
      } else if (key == "split") {
        for (const auto& [k, x] : v.items()) {
          if (k == "validation_fraction") c.split.validation_fraction = x.get<double>();
          else if (k == "size_cap") c.split.size_cap = x.get<Index>();
          else if (k == "validation_count") c.split.validation_count = x.get<std::size_t>();
          else if (k == "validation_names") c.split.validation_names = x.get<std::vector<std::string>>();
          else if (k == "seed") c.split.seed = x.get<std::uint64_t>();
          else throw Error(Errc::kInvalidArgument, "unknown split key '" + k + "'");
        }
      } else if (key == "evolution") {
        c.evolution = evolution_config_from_json(v);
      } else if (key == "designer") {
        if (!v.is_null()) {
          DesignerConfig d = designer_config_from_json(v);
          d.cache_dir = resolve(d.cache_dir, base_dir);
          d.log_path = resolve(d.log_path, base_dir);
          c.designer = d;
        }
      } else if (key == "fitness") {
        for (const auto& [k, x] : v.items()) {
          if (k == "n") c.fitness.n = x.get<Index>();
          else if (k == "samples") c.fitness.samples = x.get<std::size_t>();
          else if (k == "external") {
            if (x.is_null()) continue;
            ExternalEvaluatorConfig e;
            e.command = x.at("command").get<std::string>();
            e.work_root = resolve(x.value("work_root", std::string()), base_dir);
            if (x.contains("timeout_ms")) e.timeout = std::chrono::milliseconds(x["timeout_ms"].get<std::int64_t>());
            c.fitness.external = e;
          } else {
            throw Error(Errc::kInvalidArgument, "unknown fitness key '" + k + "'");
          }
        }
      } else if (key == "phase1") {
        for (const auto& [k, x] : v.items()) {
          if (k == "total") c.phase1.total = x.get<std::size_t>();
          else if (k == "n") c.phase1.n = x.get<Index>();
          else if (k == "with_labels") c.phase1.with_labels = x.get<bool>();
          else throw Error(Errc::kInvalidArgument, "unknown phase1 key '" + k + "'");
        }
      } else if (key == "phase2") {
        c.phase2 = batch_schedule_from_json(v.contains("schedule") ? v["schedule"] : v);
      } else {
        throw Error(Errc::kInvalidArgument, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, std::string("config: ") + ex.what());
  }
  c.check();
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["corpus"] = c.corpus.string();
  j["manifest"] = c.manifest.string();
  j["best_known"] = c.best_known.string();
  j["output"] = c.output.string();
  j["seed"] = c.seed;
  j["mock_designer"] = c.mock_designer;
  j["thresholds"] = {{"fft", c.thresholds.fft_threshold}, {"nn", c.thresholds.nn_threshold}};
  nlohmann::json split = {{"validation_fraction", c.split.validation_fraction}, {"seed", c.split.seed}};
  if (c.split.size_cap) split["size_cap"] = *c.split.size_cap;
  if (c.split.validation_count) split["validation_count"] = *c.split.validation_count;
  if (!c.split.validation_names.empty()) split["validation_names"] = c.split.validation_names;
  j["split"] = split;
  j["evolution"] = to_json(c.evolution);
  j["designer"] = c.designer ? to_json(*c.designer) : nlohmann::json(nullptr);
  nlohmann::json fit = {{"n", c.fitness.n}, {"samples", c.fitness.samples}};
  if (c.fitness.external) {
    fit["external"] = {{"command", c.fitness.external->command},
                       {"work_root", c.fitness.external->work_root.string()},
                       {"timeout_ms", c.fitness.external->timeout.count()}};
  }
  j["fitness"] = fit;
  j["phase1"] = {{"total", c.phase1.total}, {"n", c.phase1.n}, {"with_labels", c.phase1.with_labels}};
  j["phase2"] = {{"schedule", to_json(c.phase2)}};
  return j;
}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "stage '" + stage + "' failed: " + cause.what(), cause.details()),
      stage_(std::move(stage)) {}

void prepare_output_dir(const std::filesystem::path& dir, bool force) {
  if (std::filesystem::exists(dir)) {
    if (!std::filesystem::is_directory(dir)) {
      throw Error(Errc::kIo, dir.string() + " exists and is not a directory");
    }
    if (!std::filesystem::is_empty(dir)) {
      if (!force) {
        throw Error(Errc::kIo, "output directory " + dir.string() + " is not empty (use --force to overwrite)");
      }
      for (const auto& e : std::filesystem::directory_iterator(dir)) std::filesystem::remove_all(e.path());
    }
  }
  std::filesystem::create_directories(dir);
}

nlohmann::json run_pipeline(const PipelineConfig& config, bool force) {
  config.check();
  run_stage("output", [&] { prepare_output_dir(config.output, force); });

  Corpus corpus = run_stage("load", [&] {
    Corpus c;
    if (!config.manifest.empty()) {
      c.manifest = load_manifest(config.manifest);
      c.instances = load_instances(c.manifest, config.jobs);
    } else {
      if (!std::filesystem::is_directory(config.corpus)) {
        throw Error(Errc::kIo, "corpus directory not found: " + config.corpus.string());
      }
      const auto best = config.best_known.empty() ? std::map<std::string, double>{}
                                                  : load_best_known(config.best_known);
      c = scan_corpus(config.corpus, best, config.jobs);
    }
    if (c.instances.empty()) throw Error(Errc::kEmptyCorpus, "corpus has no instances");
    return c;
  });

  std::vector<StructuralStats> stats(corpus.instances.size());
  run_stage("stats", [&] {
    parallel_for(corpus.instances.size(), config.jobs, [&](std::size_t i) {
      stats[i] = instance_stats(corpus.instances[i]);
    });
    for (std::size_t i = 0; i < stats.size(); ++i) {
      auto& e = corpus.manifest.entries[i];
      e.segment = e.kind == ProblemKind::kTsp ? std::optional(classify(stats[i], config.thresholds))
                                              : std::nullopt;
    }
  });

  const CorpusManifest split = run_stage("split", [&] {
    SplitOptions options = config.split;
    return split_corpus(corpus.manifest, options);
  });
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < corpus.manifest.entries.size(); ++i) index_of[corpus.manifest.entries[i].name] = i;
  {
    CorpusManifest stored = split;
    for (auto& e : stored.entries) {
      e.path = std::filesystem::relative(std::filesystem::absolute(e.path),
                                         std::filesystem::absolute(config.output))
                   .generic_string();
    }
    save_manifest(config.output / "manifest.json", stored);
  }

  // Target features per category from the validation members.
  std::map<ProgramCategory, std::vector<StructuralStats>> targets;
  for (const auto& e : split.with_role(SplitRole::kValidation)) {
    targets[entry_category(e)].push_back(stats[index_of.at(e.name)]);
  }

  std::map<ProgramCategory, GeneratorProgram> best_programs;
  nlohmann::json evolution_summary = nlohmann::json::object();
  run_stage("evolve", [&] {
    std::unique_ptr<Designer> designer;
    if (config.mock_designer) designer = std::make_unique<MockDesigner>();
    else designer = std::make_unique<LlmDesigner>(*config.designer);
    for (const auto& [category, target] : targets) {
      const std::string cat(to_string(category));
      FitnessFn fitness;
      if (config.fitness.external) {
        ExternalEvaluatorConfig ext = *config.fitness.external;
        if (ext.work_root.empty()) ext.work_root = config.output / "evaluations" / cat;
        fitness = [ext, n = config.fitness.n, s = config.fitness.samples](const GeneratorProgram& p,
                                                                          std::uint64_t seed) {
          return external_fitness(p, ext, n, s, seed);
        };
      } else {
        fitness = [&target, &config](const GeneratorProgram& p, std::uint64_t seed) {
          return feature_divergence(p, target, config.fitness.n, config.fitness.samples, seed);
        };
      }
      EvolutionConfig ec = config.evolution;
      ec.seed = derive_seed(config.seed, 0x65766f6c7665ULL + static_cast<std::uint64_t>(category));
      ec.jobs = config.jobs;
      const EvolutionReport report = evolve(ec, *designer, fitness, category);
      const std::filesystem::path dir = config.output / "evolution" / cat;
      write_run_artifacts(report, dir);
      if (!report.best) {
        throw Error(Errc::kDesignerUnavailable, "evolution for " + cat + " produced no evaluated program (" +
                                                    report.stop_reason + ")");
      }
      best_programs[category] = report.best->program;
      evolution_summary[cat] = {{"best_id", report.best->id},
                                {"best_hash", report.best->hash},
                                {"best_fitness", *report.best->fitness},
                                {"trajectory", report.best_fitness_sequence()},
                                {"evaluations", report.evaluations},
                                {"stop_reason", report.stop_reason},
                                {"target_size", target.size()},
                                {"program", "evolution/" + cat + "/best_program.json"}};
    }
  });

  const Phase1Result phase1 = run_stage("phase1", [&] {
    Phase1Options options = config.phase1;
    if (options.total == 0) options.total = split.with_role(SplitRole::kValidation).size();
    options.seed = derive_seed(config.seed, 0x70686173653131ULL);
    options.jobs = config.jobs;
    return emit_phase1(best_programs, split, options, config.output / "phase1");
  });

  const auto phase2 = run_stage("phase2", [&] {
    std::vector<Instance> aligned;
    for (const auto& e : split.entries) aligned.push_back(corpus.instances[index_of.at(e.name)]);
    return emit_phase2(split, aligned, config.phase2, derive_seed(config.seed, 0x70686173653232ULL),
                       config.output / "phase2");
  });

  nlohmann::json summary;
  summary["thresholds"] = {{"fft", config.thresholds.fft_threshold}, {"nn", config.thresholds.nn_threshold}};
  nlohmann::json segments = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.manifest.entries.size(); ++i) {
    const auto& e = corpus.manifest.entries[i];
    const auto role = split.split.find(e.name);
    segments.push_back({{"name", e.name},
                        {"n", e.n},
                        {"fft_energy", stats[i].fft_energy},
                        {"nn_ratio", stats[i].nn_ratio},
                        {"label", e.segment ? nlohmann::json(std::string(to_string(*e.segment))) : nlohmann::json(nullptr)},
                        {"role", role == split.split.end() ? "excluded" : std::string(to_string(role->second))}});
  }
  summary["instances"] = segments;
  summary["manifest"] = "manifest.json";
  summary["evolution"] = evolution_summary;
  nlohmann::json p1counts = nlohmann::json::object();
  for (const auto& [cat, n] : phase1.counts) p1counts[std::string(to_string(cat))] = n;
  summary["phase1"] = {{"dir", "phase1"}, {"counts", p1counts}, {"files", phase1.files.size()}};
  std::size_t replicas = 0;
  for (const auto& b : phase2) replicas += b.files.size();
  summary["phase2"] = {{"dir", "phase2"}, {"batches", phase2.size()}, {"files", replicas},
                       {"schedule", config.phase2.name}};
  write_text_file(config.output / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace routegen
