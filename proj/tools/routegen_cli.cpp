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

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "routegen/designer.hpp"
#include "routegen/evolution.hpp"
#include "routegen/fitness.hpp"
#include "routegen/pipeline.hpp"
#include "routegen/solvers.hpp"
#include "routegen/stats.hpp"
#include "routegen/util.hpp"
#include "routegen/vrplib.hpp"

namespace {

using namespace routegen;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitConfig = 2;

/// Marks errors that come from user configuration rather than a stage.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool mock_designer = false;
  std::size_t jobs = 1;
  bool force = false;
};

nlohmann::json load_config_doc(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const std::exception& ex) {
    throw ConfigError("cannot read config " + path + ": " + ex.what());
  }
}

/// Instance files named on the command line; directories expand to their
/// *.tsp and *.vrp files in name order.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension();
        if (ext == ".tsp" || ext == ".vrp") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

void emit_line(const nlohmann::json& j) { std::cout << j.dump() << "\n"; }

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty()) std::cout << text;
  else write_text_file(out, text);
}

/// Loads a manifest file or scans a corpus directory.
Corpus load_corpus(const std::string& manifest, const std::string& corpus, const std::string& best_known,
                   std::size_t jobs) {
  if (!manifest.empty()) {
    Corpus c;
    c.manifest = load_manifest(manifest);
    c.instances = load_instances(c.manifest, jobs);
    return c;
  }
  if (corpus.empty()) throw ConfigError("need --manifest or --corpus");
  const auto best = best_known.empty() ? std::map<std::string, double>{} : load_best_known(best_known);
  return scan_corpus(corpus, best, jobs);
}

SegmentThresholds thresholds_from(const nlohmann::json& doc) {
  SegmentThresholds t = SegmentThresholds::calibrated();
  if (doc.contains("thresholds")) {
    t.fft_threshold = doc["thresholds"].at("fft").get<double>();
    t.nn_threshold = doc["thresholds"].at("nn").get<double>();
  }
  return t;
}

GeneratorProgram load_program(const std::string& path) { return parse_program(read_text_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-aware routing instance generators: corpus tools, generator evolution and dataset emission"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_value, "RNG seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--mock-designer", g.mock_designer, "Use the offline mock designer");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--force", g.force, "Overwrite a non-empty output directory");

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "Parse instance files and print a JSON summary per file");
  std::vector<std::string> parse_inputs;
  parse_cmd->add_option("inputs", parse_inputs, "Instance files or directories")->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Print {name, n, fft_energy, nn_ratio, label} per instance");
  std::vector<std::string> stats_inputs;
  stats_cmd->add_option("inputs", stats_inputs, "Instance files or directories")->required();

  // segment
  auto* segment_cmd = app.add_subcommand("segment", "Label corpus entries S1/S2/S3 and write the manifest");
  std::string seg_manifest, seg_corpus, seg_best;
  segment_cmd->add_option("--manifest", seg_manifest, "Input manifest");
  segment_cmd->add_option("--corpus", seg_corpus, "Corpus directory to scan");
  segment_cmd->add_option("--best-known", seg_best, "Best-known optimum sidecar");

  // split
  auto* split_cmd = app.add_subcommand("split", "Split a corpus into validation and unseen sets");
  std::string split_manifest, split_corpus_dir, split_best;
  double split_fraction = 0.7;
  std::optional<Index> split_cap;
  std::optional<std::size_t> split_count;
  std::vector<std::string> split_names;
  split_cmd->add_option("--manifest", split_manifest, "Input manifest");
  split_cmd->add_option("--corpus", split_corpus_dir, "Corpus directory to scan");
  split_cmd->add_option("--best-known", split_best, "Best-known optimum sidecar");
  split_cmd->add_option("--fraction", split_fraction, "Validation fraction");
  split_cmd->add_option("--size-cap", split_cap, "Drop instances with n >= cap");
  split_cmd->add_option("--count", split_count, "Exact validation count");
  split_cmd->add_option("--names", split_names, "Explicit validation members");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve instances with the reference heuristics");
  std::vector<std::string> solve_inputs;
  std::string solve_best;
  solve_cmd->add_option("inputs", solve_inputs, "Instance files or directories")->required();
  solve_cmd->add_option("--best-known", solve_best, "Best-known optimum sidecar");

  // evolve
  auto* evolve_cmd = app.add_subcommand("evolve", "Evolve a generator program for one category");
  std::string evo_category = "S3", evo_target_manifest, evo_target_corpus, evo_seed_program;
  evolve_cmd->add_option("--category", evo_category, "S1, S2, S3 or CVRP");
  evolve_cmd->add_option("--target-manifest", evo_target_manifest, "Manifest whose validation members form the target");
  evolve_cmd->add_option("--target", evo_target_corpus, "Directory of target instances");
  evolve_cmd->add_option("--seed-program", evo_seed_program, "Starting program (default: category seed)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Sample instances from a program");
  std::string sample_program, sample_category;
  Index sample_n = 100;
  std::size_t sample_count = 1;
  sample_cmd->add_option("--program", sample_program, "Program JSON file");
  sample_cmd->add_option("--category", sample_category, "Use the seed program of this category");
  sample_cmd->add_option("-n,--size", sample_n, "Instance size")->check(CLI::Range(Index{2}, Index{10000000}));
  sample_cmd->add_option("--count", sample_count, "Number of instances");

  // emit-phase1
  auto* p1_cmd = app.add_subcommand("emit-phase1", "Emit the mixed-ratio synthetic dataset");
  std::vector<std::string> p1_programs;
  std::string p1_manifest;
  std::size_t p1_total = 0;
  Index p1_n = 100;
  bool p1_labels = false;
  p1_cmd->add_option("--program", p1_programs, "CATEGORY=program.json, repeatable")->required();
  p1_cmd->add_option("--manifest", p1_manifest, "Labeled, split manifest")->required();
  p1_cmd->add_option("--total", p1_total, "Number of instances")->required();
  p1_cmd->add_option("-n,--size", p1_n, "Instance size");
  p1_cmd->add_flag("--with-labels", p1_labels, "Attach reference solutions");

  // emit-phase2
  auto* p2_cmd = app.add_subcommand("emit-phase2", "Emit batch-expanded validation instances");
  std::string p2_manifest, p2_schedule = "pomo_tsp";
  p2_cmd->add_option("--manifest", p2_manifest, "Split manifest")->required();
  p2_cmd->add_option("--schedule", p2_schedule, "pomo_tsp, pomo_cvrp, lehd_tsp, lehd_cvrp or a JSON file");

  // calibrate-thresholds
  auto* cal_cmd = app.add_subcommand("calibrate-thresholds", "Fit segmentation thresholds");
  std::size_t cal_samples = 200;
  Index cal_n = 100;
  std::string cal_manifest;
  cal_cmd->add_option("--from-seeds", cal_samples, "Samples per seed program");
  cal_cmd->add_option("-n,--size", cal_n, "Instance size");
  cal_cmd->add_option("--manifest", cal_manifest, "Labeled manifest to fit on instead");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (*seed_opt) g.seed = seed_value;
  const std::uint64_t seed = g.seed.value_or(0);

  try {
    const nlohmann::json cfg = load_config_doc(g.config);

    if (*parse_cmd) {
      for (const auto& path : expand_inputs(parse_inputs)) {
        std::vector<ParseWarning> warnings;
        const Instance inst = read_instance_file(path, &warnings);
        nlohmann::json j = {{"file", path.string()}, {"name", inst.name}, {"n", inst.size()},
                            {"kind", std::string(to_string(inst.kind))}};
        if (inst.capacity) j["capacity"] = *inst.capacity;
        if (inst.depot_index) j["depot"] = *inst.depot_index;
        nlohmann::json w = nlohmann::json::array();
        for (const auto& x : warnings) w.push_back({{"line", x.line}, {"message", x.message}});
        j["warnings"] = w;
        emit_line(j);
      }
    } else if (*stats_cmd) {
      const SegmentThresholds t = thresholds_from(cfg);
      for (const auto& path : expand_inputs(stats_inputs)) {
        const Instance inst = read_instance_file(path);
        const StructuralStats s = instance_stats(inst);
        emit_line({{"name", inst.name}, {"n", s.n}, {"fft_energy", s.fft_energy},
                   {"nn_ratio", s.nn_ratio}, {"label", std::string(to_string(classify(s, t)))}});
      }
    } else if (*segment_cmd) {
      const SegmentThresholds t = thresholds_from(cfg);
      Corpus c = load_corpus(seg_manifest, seg_corpus, seg_best, g.jobs);
      std::vector<StructuralStats> stats(c.instances.size());
      parallel_for(c.instances.size(), g.jobs, [&](std::size_t i) { stats[i] = instance_stats(c.instances[i]); });
      for (std::size_t i = 0; i < stats.size(); ++i) {
        auto& e = c.manifest.entries[i];
        if (e.kind == ProblemKind::kTsp) e.segment = classify(stats[i], t);
      }
      write_or_print(g.out, to_json(c.manifest).dump(2) + "\n");
    } else if (*split_cmd) {
      Corpus c = load_corpus(split_manifest, split_corpus_dir, split_best, g.jobs);
      SplitOptions o;
      o.validation_fraction = split_fraction;
      o.size_cap = split_cap;
      o.validation_count = split_count;
      o.validation_names = split_names;
      o.seed = seed;
      write_or_print(g.out, to_json(split_corpus(c.manifest, o)).dump(2) + "\n");
    } else if (*solve_cmd) {
      const auto best = solve_best.empty() ? std::map<std::string, double>{} : load_best_known(solve_best);
      const auto files = expand_inputs(solve_inputs);
      std::vector<nlohmann::json> rows(files.size());
      parallel_for(files.size(), g.jobs, [&](std::size_t i) {
        Instance inst = read_instance_file(files[i]);
        if (const auto it = best.find(inst.name); it != best.end()) inst.best_known = it->second;
        const SolveResult r = solve_instance(inst);
        rows[i] = {{"name", r.name}, {"objective", r.objective}, {"wall_time_ms", r.wall_time_ms}};
        if (r.gap) rows[i]["gap"] = *r.gap;
      });
      for (const auto& r : rows) emit_line(r);
    } else if (*evolve_cmd) {
      ProgramCategory category;
      try {
        category = parse_program_category(evo_category);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      if (g.out.empty()) throw ConfigError("evolve needs --out");
      EvolutionConfig ec;
      FitnessSettings fs_settings;
      std::optional<DesignerConfig> dc;
      try {
        if (cfg.contains("evolution")) ec = evolution_config_from_json(cfg["evolution"]);
        if (cfg.contains("designer") && !cfg["designer"].is_null()) dc = designer_config_from_json(cfg["designer"]);
        if (cfg.contains("fitness")) {
          fs_settings.n = cfg["fitness"].value("n", fs_settings.n);
          fs_settings.samples = cfg["fitness"].value("samples", fs_settings.samples);
        }
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      if (g.seed) ec.seed = *g.seed;
      ec.jobs = g.jobs;
      if (!g.mock_designer && !dc) throw ConfigError("evolve needs --mock-designer or a designer config section");

      std::vector<StructuralStats> target;
      if (!evo_target_manifest.empty() || !evo_target_corpus.empty()) {
        Corpus c = load_corpus(evo_target_manifest, evo_target_corpus, "", g.jobs);
        for (std::size_t i = 0; i < c.instances.size(); ++i) {
          const auto& e = c.manifest.entries[i];
          const auto role = c.manifest.split.find(e.name);
          if (!evo_target_manifest.empty() && role != c.manifest.split.end() &&
              role->second != SplitRole::kValidation) {
            continue;
          }
          if (!evo_target_manifest.empty() && e.segment && category != ProgramCategory::kCvrp &&
              category_of(*e.segment) != category) {
            continue;
          }
          target.push_back(instance_stats(c.instances[i]));
        }
      }
      if (target.empty()) throw ConfigError("evolve needs a non-empty target (--target or --target-manifest)");
      FitnessFn fitness = [&](const GeneratorProgram& p, std::uint64_t s) {
        return feature_divergence(p, target, fs_settings.n, fs_settings.samples, s);
      };
      std::unique_ptr<Designer> designer;
      if (g.mock_designer) designer = std::make_unique<MockDesigner>();
      else designer = std::make_unique<LlmDesigner>(*dc);
      std::optional<GeneratorProgram> start;
      if (!evo_seed_program.empty()) start = load_program(evo_seed_program);
      prepare_output_dir(g.out, g.force);
      const EvolutionReport report = evolve(ec, *designer, fitness, category, start);
      write_run_artifacts(report, g.out);
      emit_line({{"category", evo_category},
                 {"best_fitness", report.best ? nlohmann::json(*report.best->fitness) : nlohmann::json(nullptr)},
                 {"evaluations", report.evaluations},
                 {"stop_reason", report.stop_reason}});
      if (!report.best) return kExitFatal;
    } else if (*sample_cmd) {
      GeneratorProgram program;
      if (!sample_program.empty()) program = load_program(sample_program);
      else if (!sample_category.empty()) program = seed_program(parse_program_category(sample_category));
      else throw ConfigError("sample needs --program or --category");
      if (g.out.empty()) throw ConfigError("sample needs --out");
      fs::create_directories(g.out);
      for (std::size_t i = 0; i < sample_count; ++i) {
        Instance inst = round_instance(sample_instance(program, sample_n, derive_seed(seed, i)), 6);
        const fs::path file = fs::path(g.out) / (inst.name + std::string(instance_extension(inst.kind)));
        write_instance_file(file, inst, 6);
        emit_line({{"file", file.string()}, {"name", inst.name}});
      }
    } else if (*p1_cmd) {
      if (g.out.empty()) throw ConfigError("emit-phase1 needs --out");
      std::map<ProgramCategory, GeneratorProgram> programs;
      for (const auto& spec : p1_programs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("--program expects CATEGORY=file, got " + spec);
        programs[parse_program_category(spec.substr(0, eq))] = load_program(spec.substr(eq + 1));
      }
      Phase1Options o;
      o.total = p1_total;
      o.n = p1_n;
      o.seed = seed;
      o.with_labels = p1_labels;
      o.jobs = g.jobs;
      prepare_output_dir(g.out, g.force);
      const auto r = emit_phase1(programs, load_manifest(p1_manifest), o, g.out);
      nlohmann::json counts = nlohmann::json::object();
      for (const auto& [c, n] : r.counts) counts[std::string(to_string(c))] = n;
      emit_line({{"counts", counts}, {"files", r.files.size()}});
    } else if (*p2_cmd) {
      if (g.out.empty()) throw ConfigError("emit-phase2 needs --out");
      BatchSchedule schedule;
      try {
        schedule = fs::exists(p2_schedule)
                       ? batch_schedule_from_json(nlohmann::json::parse(read_text_file(p2_schedule)))
                       : BatchSchedule::preset(p2_schedule);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      const CorpusManifest m = load_manifest(p2_manifest);
      const auto instances = load_instances(m, g.jobs);
      prepare_output_dir(g.out, g.force);
      const auto batches = emit_phase2(m, instances, schedule, seed, g.out);
      std::size_t files = 0;
      for (const auto& b : batches) files += b.files.size();
      emit_line({{"batches", batches.size()}, {"files", files}});
    } else if (*cal_cmd) {
      SegmentThresholds t;
      if (!cal_manifest.empty()) {
        Corpus c = load_corpus(cal_manifest, "", "", g.jobs);
        std::vector<LabeledStats> labeled;
        for (std::size_t i = 0; i < c.instances.size(); ++i) {
          if (c.manifest.entries[i].segment) {
            labeled.push_back({instance_stats(c.instances[i]), *c.manifest.entries[i].segment});
          }
        }
        t = calibrate_thresholds(labeled);
      } else {
        t = calibrate_from_seeds(cal_samples, cal_n, seed, g.jobs);
      }
      const std::string text = nlohmann::json{{"fft", t.fft_threshold}, {"nn", t.nn_threshold}}.dump() + "\n";
      write_or_print(g.out, text);
    } else if (*run_cmd) {
      if (g.config.empty()) throw ConfigError("run needs --config");
      PipelineConfig pc;
      try {
        pc = pipeline_config_from_json(cfg, fs::path(g.config).parent_path());
        if (g.seed) pc.seed = *g.seed;
        if (!g.out.empty()) pc.output = g.out;
        if (g.mock_designer) pc.mock_designer = true;
        pc.jobs = g.jobs;
        pc.check();
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      const auto summary = run_pipeline(pc, g.force);
      std::cout << summary["evolution"].dump(2) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StageError& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}
