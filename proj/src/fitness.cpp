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

#include "routegen/fitness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstring>
#include <cmath>
#include <thread>

#include "routegen/util.hpp"
#include "routegen/vrplib.hpp"

extern char** environ;

namespace routegen {
namespace {

struct MeanStd {
  double mean;
  double std;
};

MeanStd mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

struct CommandResult {
  int exit_status = 0;
  std::string stdout_text;
};

/// Runs `/bin/sh -c line` in its own process group, capturing stdout and
/// sending stderr to `stderr_path`. Kills the group on timeout.
CommandResult run_command(const std::string& line, const std::filesystem::path& stderr_path,
                          std::chrono::milliseconds timeout) {
  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) throw Error(Errc::kEvaluatorFailed, "pipe() failed");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, stderr_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const char* argv[] = {"/bin/sh", "-c", line.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw Error(Errc::kEvaluatorFailed, "could not start evaluator: " + std::string(strerror(rc)));
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto remaining_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now())
        .count();
  };
  auto kill_and_throw = [&] {
    kill(-pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    close(fds[0]);
    throw Error(Errc::kEvaluatorTimeout,
                "evaluator exceeded " + std::to_string(timeout.count()) + " ms");
  };

  CommandResult result;
  char buf[4096];
  for (;;) {
    const auto left = remaining_ms();
    if (left <= 0) kill_and_throw();
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    const ssize_t got = read(fds[0], buf, sizeof buf);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) break;
    result.stdout_text.append(buf, static_cast<std::size_t>(got));
  }
  close(fds[0]);

  int status = 0;
  for (;;) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) throw Error(Errc::kEvaluatorFailed, "waitpid failed");
    if (remaining_ms() <= 0) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw Error(Errc::kEvaluatorTimeout,
                  "evaluator exceeded " + std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  // Reap stragglers left in the group.
  kill(-pid, SIGKILL);
  if (WIFEXITED(status)) result.exit_status = WEXITSTATUS(status);
  else result.exit_status = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  return result;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

double parse_last_line(const std::string& out) {
  std::string_view text = trim(out);
  if (text.empty()) throw Error(Errc::kEvaluatorProtocol, "evaluator printed nothing");
  const auto nl = text.find_last_of('\n');
  const std::string_view line = trim(nl == std::string_view::npos ? text : text.substr(nl + 1));
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
  if (ec != std::errc() || ptr != line.data() + line.size() || !std::isfinite(value)) {
    throw Error(Errc::kEvaluatorProtocol, "last stdout line is not a number: '" + std::string(line) + "'");
  }
  return value;
}

std::filesystem::path fresh_directory(const std::filesystem::path& root, const std::string& stem) {
  std::filesystem::create_directories(root);
  static std::atomic<unsigned> counter{0};
  for (int attempt = 0; attempt < 10000; ++attempt) {
    auto dir = root / (stem + "-" + std::to_string(getpid()) + "-" + std::to_string(counter++));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw Error(Errc::kIo, "could not create a work directory under " + root.string());
}

}  // namespace

nlohmann::json to_json(const FitnessReport& report) {
  nlohmann::json j;
  j["score"] = report.score;
  j["per_feature"] = report.per_feature;
  j["samples_used"] = report.samples_used;
  j["seed"] = report.seed;
  j["degenerate_features"] = report.degenerate_features;
  return j;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::kInvalidArgument, "wasserstein1 needs samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    const double width = all[k + 1] - all[k];
    if (width == 0.0) continue;
    const auto ca = std::upper_bound(a.begin(), a.end(), all[k]) - a.begin();
    const auto cb = std::upper_bound(b.begin(), b.end(), all[k]) - b.begin();
    total += std::abs(static_cast<double>(ca) / na - static_cast<double>(cb) / nb) * width;
  }
  return total;
}

std::vector<StructuralStats> sample_stats(const GeneratorProgram& program, Index n,
                                          std::size_t samples, std::uint64_t seed,
                                          std::size_t jobs) {
  std::vector<StructuralStats> out(samples);
  parallel_for(samples, jobs, [&](std::size_t i) {
    out[i] = instance_stats(sample_instance(program, n, derive_seed(seed, i)));
  });
  return out;
}

FitnessReport divergence(std::span<const StructuralStats> generated,
                         std::span<const StructuralStats> target) {
  if (generated.empty() || target.empty()) {
    throw Error(Errc::kInvalidArgument, "divergence needs non-empty samples");
  }
  FitnessReport report;
  report.samples_used = generated.size();
  double sum = 0.0;
  for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
    std::vector<double> g, t;
    for (const auto& s : generated) g.push_back(FeatureVector::from(s)[f]);
    for (const auto& s : target) t.push_back(FeatureVector::from(s)[f]);
    const auto [mean, sd] = mean_std(t);
    const std::string name(kFeatureNames[f]);
    double value = 0.0;
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      value = std::abs(mean_std(g).mean - mean);
      report.degenerate_features.push_back(name);
    } else {
      for (double& x : g) x = (x - mean) / sd;
      for (double& x : t) x = (x - mean) / sd;
      value = wasserstein1(std::move(g), std::move(t));
    }
    report.per_feature[name] = value;
    sum += value;
  }
  report.score = sum / static_cast<double>(kFeatureNames.size());
  return report;
}

FitnessReport feature_divergence(const GeneratorProgram& program,
                                 std::span<const StructuralStats> target, Index n,
                                 std::size_t samples, std::uint64_t seed, std::size_t jobs) {
  if (samples < kMinFitnessSamples) {
    throw Error(Errc::kInvalidArgument,
                "feature_divergence needs at least " + std::to_string(kMinFitnessSamples) + " samples");
  }
  if (target.empty()) throw Error(Errc::kEmptyCorpus, "feature_divergence needs target stats");
  const auto generated = sample_stats(program, n, samples, seed, jobs);
  FitnessReport report = divergence(generated, target);
  report.seed = seed;
  return report;
}

FitnessReport external_fitness(const GeneratorProgram& program,
                               const ExternalEvaluatorConfig& config, Index n,
                               std::size_t samples, std::uint64_t seed) {
  if (config.command.empty()) throw Error(Errc::kInvalidArgument, "external evaluator command is empty");
  if (samples < 1) throw Error(Errc::kInvalidArgument, "external_fitness needs samples >= 1");
  const std::string hash = program_hash(program);
  const auto dir = fresh_directory(config.work_root.empty() ? std::filesystem::temp_directory_path() / "routegen-eval"
                                                            : config.work_root,
                                   hash + "-s" + std::to_string(seed));
  std::filesystem::create_directories(dir / "instances");
  const int width = static_cast<int>(std::to_string(samples).size());
  for (std::size_t i = 0; i < samples; ++i) {
    Instance inst = sample_instance(program, n, derive_seed(seed, i));
    std::string idx = std::to_string(i);
    idx.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(idx.size()))), '0');
    inst.name = "sample_" + idx;
    write_instance_file(dir / "instances" / (inst.name + std::string(instance_extension(inst.kind))), inst);
  }
  nlohmann::json meta;
  meta["program_hash"] = hash;
  meta["n"] = n;
  meta["samples"] = samples;
  meta["seed"] = seed;
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");

  const auto result = run_command(config.command + " " + shell_quote(dir.string()),
                                  dir / "evaluator.stderr", config.timeout);
  if (result.exit_status != 0) {
    throw Error(Errc::kEvaluatorFailed,
                "evaluator exited with status " + std::to_string(result.exit_status));
  }
  FitnessReport report;
  report.score = parse_last_line(result.stdout_text);
  report.per_feature["external"] = report.score;
  report.samples_used = samples;
  report.seed = seed;
  return report;
}

}  // namespace routegen
