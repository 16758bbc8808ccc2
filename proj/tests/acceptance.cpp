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

// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "routegen/designer.hpp"
#include "routegen/evolution.hpp"
#include "routegen/fitness.hpp"
#include "routegen/pipeline.hpp"
#include "routegen/solvers.hpp"
#include "routegen/stats.hpp"
#include "routegen/vrplib.hpp"
#include "test_support.hpp"

namespace {

using namespace routegen;
using testing::fixture;
using testing::scratch_dir;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int decimals = 4) { return format_fixed(v, decimals); }

/// Brute-force 2-D DFT used as the reference for the fast transform.
Eigen::MatrixXcd brute_dft(const Eigen::MatrixXd& g) {
  const Index r = g.rows(), c = g.cols();
  Eigen::MatrixXcd out(r, c);
  for (Index u = 0; u < r; ++u)
    for (Index v = 0; v < c; ++v) {
      std::complex<double> acc = 0;
      for (Index x = 0; x < r; ++x)
        for (Index y = 0; y < c; ++y)
          acc += g(x, y) * std::polar(1.0, -2.0 * std::numbers::pi *
                                                (static_cast<double>(u * x) / r + static_cast<double>(v * y) / c));
      out(u, v) = acc;
    }
  return out;
}

Outcome gap_fidelity() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::string berlin = format_gap_percent(gap(9445.60, 7542));
  const std::string pr76 = format_gap_percent(gap(108159.44, 108159));
  const double elapsed = ms_since(t0);
  o.require(berlin == "25.24%", "berlin52 rendered " + berlin);
  o.require(pr76 == "0.00%", "pr76 rendered " + pr76);
  o.require(std::abs(gap(9445.60, 7542) * 100 - 25.24) <= 0.01, "berlin52 tolerance");
  o.require(std::abs(gap(108159.44, 108159) * 100 - 0.00) <= 0.01, "pr76 tolerance");
  o.require(elapsed < 1.0, "runtime");
  o.note << "berlin52 " << berlin << ", pr76 " << pr76 << ", " << fmt(elapsed, 3) << " ms";
  return o;
}

Outcome normalization_suite() {
  Outcome o;
  PointSet2d hand(2, 2);
  hand << 0, 0, 2, 1;
  const auto [h, hrec] = normalize_coords(hand);
  o.require(h(0, 0) == 0 && h(0, 1) == 0 && h(1, 0) == 1 && h(1, 1) == 0.5, "hand case");
  Rng rng(2024);
  int ok = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index n = 2 + static_cast<Index>(rng.index(100));
    const double scale = std::exp(rng.uniform(-6, 9));
    const double shift = rng.uniform(-1e3, 1e3);
    PointSet2d p(n, 2);
    for (Index i = 0; i < n; ++i) p.row(i) << shift + rng.uniform() * scale, shift + rng.uniform() * scale;
    const auto [q, rec] = normalize_coords(p);
    bool good = q.minCoeff() >= 0.0 && q.maxCoeff() <= 1.0;
    for (int k = 0; k < 5 && good; ++k) {
      const Index a = static_cast<Index>(rng.index(n)), b = static_cast<Index>(rng.index(n));
      good = std::abs(node_distance(q, a, b) * rec.max_diff - node_distance(p, a, b)) <= 1e-9 * scale;
    }
    ok += good;
  }
  o.require(ok == 1000, "property failures");
  bool degenerate = false;
  try {
    PointSet2d same = PointSet2d::Constant(4, 2, 3.0);
    normalize_coords(same);
  } catch (const Error& e) {
    degenerate = e.code() == Errc::kDegenerateInput;
  }
  o.require(degenerate, "degenerate input error");
  o.note << "hand case exact, " << ok << "/1000 random sets in range with scaled distances, DegenerateInput raised";
  return o;
}

Outcome statistics_anchors() {
  Outcome o;
  PointSet2d grid(25, 2);
  for (int i = 0; i < 25; ++i) grid.row(i) << i % 5, i / 5;
  const double nn_grid = nn_ratio(grid);
  PointSet2d line(3, 2);
  line << 0, 0, 1, 0, 3, 0;
  const double nn_line = nn_ratio(line);
  const double e_uniform = fft_energy(Eigen::MatrixXd::Constant(64, 64, 1.0 / 4096));
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(64, 64);
  delta(5, 9) = 1.0;
  const double e_delta = fft_energy(delta);
  Rng rng(16);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd g(16, 16);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
    g /= g.sum();
    worst = std::max(worst, (dft2(g) - brute_dft(g)).cwiseAbs().maxCoeff());
  }
  o.require(nn_grid == 0.0, "grid nn_ratio");
  o.require(std::abs(nn_line - 0.35355) <= 1e-5, "collinear nn_ratio");
  o.require(std::abs(e_uniform) <= 1e-9, "uniform energy");
  o.require(std::abs(e_delta - 1.0) <= 1e-9, "delta energy");
  o.require(worst <= 1e-9, "DFT agreement");
  o.note << "nn(grid)=" << nn_grid << ", nn({0,1,3})=" << fmt(nn_line, 5) << ", E(uniform)=" << e_uniform
         << ", E(delta)=" << fmt(e_delta, 12) << ", max |FFT-DFT|=" << worst;
  return o;
}

Outcome segmentation_consistency() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto thresholds = SegmentThresholds::calibrated();
  const std::pair<ProgramCategory, SegmentLabel> cases[] = {
      {ProgramCategory::kS1, SegmentLabel::kS1},
      {ProgramCategory::kS2, SegmentLabel::kS2},
      {ProgramCategory::kS3, SegmentLabel::kS3}};
  for (const auto& [category, label] : cases) {
    const auto stats = sample_stats(seed_program(category), 100, 50, 0x616363);
    int hits = 0;
    for (const auto& s : stats) hits += classify(s, thresholds) == label;
    o.require(hits >= 45, std::string(to_string(category)) + " below 90%");
    o.note << to_string(category) << " " << hits << "/50, ";
  }
  const double elapsed = ms_since(t0);
  o.require(elapsed < 30000, "runtime");
  o.note << "thresholds fft=" << fmt(thresholds.fft_threshold, 5) << " nn=" << thresholds.nn_threshold << ", "
         << fmt(elapsed / 1000, 2) << " s";
  return o;
}

Outcome evolution_behavior() {
  Outcome o;
  const auto t0 = Clock::now();
  const GeneratorProgram target_program = parse_program(read_text_file(fixture("programs") / "s3_target.json"));
  const auto target = sample_stats(target_program, 100, 64, 999);
  FitnessFn fitness = [&](const GeneratorProgram& p, std::uint64_t seed) {
    return feature_divergence(p, target, 100, 32, seed);
  };
  EvolutionConfig config;  // init 30, offspring 10, crossover 1, mutation 0.5, 125 evaluations
  config.max_iterations = 10;
  config.stagnation_limit = 10;
  config.seed = 0;
  MockDesigner designer;
  const EvolutionReport a = evolve(config, designer, fitness, ProgramCategory::kS3);
  const EvolutionReport b = evolve(config, designer, fitness, ProgramCategory::kS3);
  const double elapsed = ms_since(t0);

  const auto seq = a.best_fitness_sequence();
  bool monotone = !seq.empty();
  for (std::size_t i = 1; i < seq.size(); ++i) monotone &= seq[i] <= seq[i - 1];
  const double start = fitness(seed_program(ProgramCategory::kS3), derive_seed(config.seed, 0x666974)).score;
  const double final_best = seq.empty() ? start : seq.back();
  const double reduction = 1.0 - final_best / start;
  const double reduction_iter0 = seq.empty() ? 0.0 : 1.0 - final_best / seq.front();

  o.require(a.evaluations <= 125, "evaluation budget");
  o.require(monotone, "best-fitness sequence increases");
  o.require(to_json(a).dump() == to_json(b).dump(), "runs differ");
  o.require(reduction >= 0.5, "divergence reduction below 50%");
  o.require(elapsed < 120000, "runtime");
  o.note << "(a) " << a.evaluations << "/125 evaluations, (b) non-increasing over " << seq.size()
         << " records, (c) identical reports, (d) seed program " << fmt(start) << " -> best " << fmt(final_best)
         << " (" << fmt(100 * reduction, 1) << "% reduction; " << fmt(100 * reduction_iter0, 1)
         << "% vs iteration-0 best " << fmt(seq.empty() ? 0 : seq.front()) << "), stop " << a.stop_reason << ", "
         << fmt(elapsed / 1000, 1) << " s for two runs";
  return o;
}

Outcome cvrp_model() {
  Outcome o;
  const std::vector<std::int64_t> d = {1, 2, 3, 10};
  const double cap = compute_capacity(d, 6.0, CvrpParams{});
  o.require(cap == 24.0, "capacity hand case");
  int feasible = 0;
  const auto program = seed_program(ProgramCategory::kCvrp);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Instance inst = sample_instance(program, 50, s);
    feasible += is_feasible(inst, savings_cvrp(inst));
  }
  o.require(feasible == 100, "infeasible savings solutions");
  Rng rng(0x747269);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += sample_capacity_ratio(CvrpParams{}, rng);
  const double mean = sum / 100000;
  o.require(std::abs(mean - 34.0 / 3.0) <= 0.2, "triangular mean");
  o.note << "capacity([1,2,3,10], r=6, k=2)=" << cap << ", savings feasible " << feasible
         << "/100 on CVRP-50, triangular mean " << fmt(mean) << " vs " << fmt(34.0 / 3.0);
  return o;
}

Outcome solver_regression() {
  Outcome o;
  const Instance inst = read_instance_file(fixture("berlin52.tsp"));
  const auto t0 = Clock::now();
  const Tour tour = two_opt(inst, nearest_neighbor_tour(inst));
  const double elapsed = ms_since(t0);
  const double g = gap(tour.length, 7542);
  o.require(g <= 0.10, "gap above 10%");
  o.require(std::abs(tour.length - 8060.651583) <= 1e-5, "pinned value");
  o.require(elapsed < 1000, "runtime");
  o.note << "berlin52 NN+2-opt " << fmt(tour.length, 6) << " (pinned 8060.651583), gap " << format_gap_percent(g)
         << ", " << fmt(elapsed, 2) << " ms";
  return o;
}

bool reparses_losslessly(const std::filesystem::path& file) {
  const std::string text = read_text_file(file);
  const Instance inst = parse_instance(text);
  return write_instance(inst, 6) == text && parse_instance(write_instance(inst, 6)).nodes == inst.nodes;
}

Outcome dataset_emission() {
  Outcome o;
  CorpusManifest m;
  const std::pair<SegmentLabel, int> labels[] = {{SegmentLabel::kS1, 17}, {SegmentLabel::kS2, 19}, {SegmentLabel::kS3, 12}};
  for (const auto& [label, count] : labels) {
    for (int i = 0; i < count; ++i) {
      const std::string name = std::string(to_string(label)) + "-" + std::to_string(i);
      m.entries.push_back({name + ".tsp", name, 100, ProblemKind::kTsp, std::nullopt, label});
      m.split[name] = SplitRole::kValidation;
    }
  }
  std::map<ProgramCategory, GeneratorProgram> programs;
  for (auto c : {ProgramCategory::kS1, ProgramCategory::kS2, ProgramCategory::kS3}) programs[c] = seed_program(c);
  const auto dir1 = scratch_dir("accept_phase1");
  Phase1Options opt;
  opt.total = 48;
  const auto p1 = emit_phase1(programs, m, opt, dir1);
  const std::size_t s1 = p1.counts.at(ProgramCategory::kS1), s2 = p1.counts.at(ProgramCategory::kS2),
                    s3 = p1.counts.at(ProgramCategory::kS3);
  o.require(s1 == 17 && s2 == 19 && s3 == 12 && p1.files.size() == 48, "phase-1 counts");

  CorpusManifest m2;
  m2.entries.push_back({fixture("berlin52.tsp").string(), "berlin52", 52, ProblemKind::kTsp, 7542.0, std::nullopt});
  m2.split["berlin52"] = SplitRole::kValidation;
  const auto dir2 = scratch_dir("accept_phase2");
  const auto p2 = emit_phase2(m2, {read_instance_file(fixture("berlin52.tsp"))}, BatchSchedule::pomo_tsp(), 0, dir2);
  const std::size_t copies = p2.empty() ? 0 : p2.front().files.size();
  o.require(copies == 4, "phase-2 replication");

  std::size_t lossless = 0, total = 0;
  for (const auto& f : p1.files) lossless += reparses_losslessly(dir1 / f), ++total;
  for (const auto& b : p2)
    for (const auto& f : b.files) lossless += reparses_losslessly(dir2 / f), ++total;
  o.require(lossless == total, "lossless re-parse");
  o.note << "phase-1 S1/S2/S3 = " << s1 << "/" << s2 << "/" << s3 << ", phase-2 berlin52 x" << copies << ", "
         << lossless << "/" << total << " files re-parse losslessly at 6 decimals";
  return o;
}

/// One random edit of a text file: byte flip, insertion, deletion, line drop,
/// line duplication, number corruption or truncation.
std::string mutate_text(std::string s, Rng& rng) {
  static const std::vector<std::string> tokens = {"-1", "EOF", ":", "NODE_COORD_SECTION", "DIMENSION: 0",
                                                  "nan", "1e400", "-", " ", "\n", "DEPOT_SECTION", "CAPACITY : -5",
                                                  "TYPE: CVRP", "EDGE_WEIGHT_TYPE: GEO", "99999999999999999999"};
  const int edits = 1 + static_cast<int>(rng.index(4));
  for (int e = 0; e < edits && !s.empty(); ++e) {
    const std::size_t pos = rng.index(s.size());
    switch (rng.index(7)) {
      case 0: s[pos] = static_cast<char>(rng.index(256)); break;
      case 1: s.insert(pos, tokens[rng.index(tokens.size())]); break;
      case 2: s.erase(pos, 1 + rng.index(20)); break;
      case 3: {
        const auto a = s.rfind('\n', pos), b = s.find('\n', pos);
        if (a != std::string::npos && b != std::string::npos) s.erase(a, b - a);
        break;
      }
      case 4: {
        const auto a = s.rfind('\n', pos), b = s.find('\n', pos);
        if (a != std::string::npos && b != std::string::npos) s.insert(b, s.substr(a, b - a));
        break;
      }
      case 5: s.replace(pos, 1, std::to_string(rng.uniform_int(-1000000, 1000000))); break;
      case 6: s.resize(pos); break;
    }
  }
  return s;
}

Outcome io_robustness() {
  Outcome o;
  const std::vector<std::string> seeds = {read_text_file(fixture("berlin52.tsp")),
                                          read_text_file(fixture("corpus") / "syn-cvrp-1.vrp"),
                                          read_text_file(fixture("corpus") / "syn-s1-1.tsp")};
  Rng rng(0x66757a7a);
  int parsed = 0, typed = 0, untyped = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string text = mutate_text(seeds[static_cast<std::size_t>(i) % seeds.size()], rng);
    try {
      const Instance inst = parse_instance(text);
      inst.check();
      ++parsed;
    } catch (const Error&) {
      ++typed;
    } catch (...) {
      ++untyped;
    }
  }
  o.require(untyped == 0, "untyped exceptions");

  Rng gen(0x72742);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    Instance inst;
    inst.name = "r" + std::to_string(i);
    const Index n = 2 + static_cast<Index>(gen.index(200));
    inst.nodes.resize(n, 2);
    for (Index k = 0; k < n; ++k)
      inst.nodes.row(k) << std::round(gen.uniform(-1e4, 1e4) * 1e6) / 1e6, std::round(gen.uniform() * 1e6) / 1e6;
    if (i % 2) {
      inst.kind = ProblemKind::kCvrp;
      inst.depot_index = 0;
      Eigen::VectorXd d(n);
      for (Index k = 0; k < n; ++k) d(k) = k == 0 ? 0.0 : static_cast<double>(gen.uniform_int(1, 10));
      inst.demands = d;
      inst.capacity = static_cast<double>(gen.uniform_int(20, 200));
    }
    const Instance back = parse_instance(write_instance(inst, 6));
    round_trips += back.nodes == inst.nodes && back.name == inst.name && back.kind == inst.kind &&
                   back.capacity == inst.capacity && back.depot_index == inst.depot_index &&
                   (!inst.demands || *back.demands == *inst.demands);
  }
  o.require(round_trips == 1000, "round trip");
  o.note << "10000 mutated files: " << parsed << " parsed, " << typed << " typed errors, " << untyped
         << " other; round trip " << round_trips << "/1000";
  return o;
}

Outcome designer_protocol() {
  Outcome o;
  constexpr const char* kKey = "ROUTEGEN_ACCEPT_KEY";
  testing::StubServer server;
  DesignerConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "stub";
  cfg.api_key_env = kKey;
  cfg.backoff_initial = std::chrono::milliseconds(1);
  cfg.backoff_max = std::chrono::milliseconds(4);
  cfg.timeout = std::chrono::seconds(5);
  const std::vector<ChatMessage> msgs = {{"system", "s"}, {"user", "hello"}};

  // Fail-fast without a credential, before any request.
  ::unsetenv(kKey);
  bool auth_missing = false;
  try {
    request_completion(cfg, msgs);
  } catch (const Error& e) {
    auth_missing = e.code() == Errc::kAuthMissing;
  }
  o.require(auth_missing && server.requests() == 0, "AuthMissing fail-fast");

  ::setenv(kKey, "sk-acceptance", 1);
  server.fail_first = 1;
  bool retried = false;
  try {
    request_completion(cfg, msgs);
    retried = server.requests() == 2;
  } catch (const Error&) {
  }
  o.require(retried, "retry after 429");

  server.prose_only = true;
  bool no_program = false;
  try {
    LlmDesigner prose(cfg);
    DesignerRequest r;
    r.op = DesignerOp::kMutate;
    r.programs = {{"a", seed_program(ProgramCategory::kS3), 0.5}};
    extract_program(prose.complete(r).text);
  } catch (const Error& e) {
    no_program = e.code() == Errc::kNoProgramFound;
  }
  server.prose_only = false;
  o.require(no_program, "NoProgramFound on prose");

  // Record an engine run, then replay it with no network and no credential.
  const auto dir = scratch_dir("accept_replay");
  const auto target = sample_stats(seed_program(ProgramCategory::kS3), 100, 16, 5);
  FitnessFn fitness = [&](const GeneratorProgram& p, std::uint64_t seed) {
    return feature_divergence(p, target, 60, 8, seed);
  };
  EvolutionConfig ec;
  ec.init_population = 8;
  ec.offspring_per_iteration = 4;
  ec.max_iterations = 3;
  ec.max_evaluations = 30;
  ec.stagnation_limit = 10;
  cfg.cache_mode = CacheMode::kRecord;
  cfg.cache_dir = dir / "cache";
  LlmDesigner recorder(cfg);
  const auto recorded = evolve(ec, recorder, fitness, ProgramCategory::kS3);
  write_run_artifacts(recorded, dir / "recorded");
  const int requests_after_record = server.requests();

  ::unsetenv(kKey);
  cfg.cache_mode = CacheMode::kReplay;
  cfg.endpoint = "http://127.0.0.1:1/offline";
  LlmDesigner replayer(cfg);
  const auto replayed = evolve(ec, replayer, fitness, ProgramCategory::kS3);
  write_run_artifacts(replayed, dir / "replayed");
  bool identical = to_json(recorded).dump() == to_json(replayed).dump();
  for (const char* f : {"report.json", "events.jsonl", "best_program.json"}) {
    identical &= read_text_file(dir / "recorded" / f) == read_text_file(dir / "replayed" / f);
  }
  o.require(identical, "replay differs");
  o.require(server.requests() == requests_after_record, "replay touched the network");
  o.require(recorded.evaluations > 0 && recorded.iterations.size() > 1, "recorded run too short");
  o.note << "AuthMissing with 0 requests, 429 then 200 in 2 requests, NoProgramFound on prose, replay of a "
         << recorded.iterations.size() - 1 << "-iteration run (" << requests_after_record - 2 - 1
         << " designer calls) byte-identical offline";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 gap-metric fidelity", gap_fidelity},
      {"2 normalization suite", normalization_suite},
      {"3 statistics anchors", statistics_anchors},
      {"4 segmentation self-consistency", segmentation_consistency},
      {"5 evolution behavior", evolution_behavior},
      {"6 CVRP model", cvrp_model},
      {"7 solver regression", solver_regression},
      {"8 dataset emission", dataset_emission},
      {"9 IO robustness", io_robustness},
      {"10 designer protocol", designer_protocol},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << "exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.note.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
