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

#include "routegen/designer.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "routegen/util.hpp"

namespace routegen {
namespace {

constexpr std::string_view kProblemTsp =
    "We train neural solvers for the Euclidean Traveling Salesman Problem: given n cities in the "
    "unit square, find the shortest closed tour visiting each city exactly once. Real benchmark "
    "instances are not uniform random; they carry structure that a solver trained on uniform data "
    "handles poorly. You design instance generators whose samples match a family of real "
    "instances, so that fine-tuning on them transfers.";

constexpr std::string_view kProblemCvrp =
    "We train neural solvers for the Capacitated Vehicle Routing Problem: a depot and n customers "
    "with integer demands in [1, 10]; vehicles of fixed capacity start and end at the depot and "
    "every customer is served once. Demands and capacities are sampled by the framework. You "
    "design the spatial layout of customers and choose how the depot is placed.";

constexpr std::string_view kSystemGenerator =
    "You are an expert in combinatorial optimization and spatial point processes. You write "
    "instance generators as programs in a small JSON language of point-set primitives. You "
    "answer with exactly one program in a single ```json fenced block and nothing after it.";

constexpr std::string_view kSystemReflector =
    "You are an expert reviewer of instance generators for routing problems. You compare "
    "generators by their measured fitness (lower is better) and explain concisely which "
    "structural choices help.";

constexpr std::string_view kGuidanceS1 =
    "Target family: repeated geometric patterns. Real instances of this family (drilling and "
    "circuit-board layouts) repeat a small motif many times on a rough lattice, which gives the "
    "density map strong periodic structure. Prefer MotifReplicate over compact motifs (Ring, "
    "Grid, small ClusterMixture); vary the copy count, motif scale and lattice jitter. Keep "
    "motifs small relative to their lattice cell.";

constexpr std::string_view kGuidanceS2 =
    "Target family: grid-like or weakly clustered layouts. Nearest-neighbour distances are "
    "nearly equal, so their coefficient of variation is low. Prefer Grid-based programs with "
    "small Jitter, Affine shears or rotations, Stripe bands and mild Dropout holes. Avoid tight "
    "clusters, which raise the variation of nearest-neighbour distances.";

constexpr std::string_view kGuidanceS3 =
    "Target family: locally aggregated layouts. Cities gather in clusters of different sizes and "
    "spreads, often over a sparse background, so nearest-neighbour distances vary strongly. "
    "Prefer ClusterMixture with varied sigma and size skew, mixed with a Uniform or Stripe "
    "background through Mixture. Avoid perfectly regular structure.";

constexpr std::string_view kGuidanceCvrp =
    "Target family: CVRP benchmark layouts, which combine random, clustered and mixed customer "
    "placements with a depot at the centre, at a corner or at a random position. Use Mixture to "
    "blend ClusterMixture and Uniform components and set the top-level \"depot\" field to "
    "center, corner, random or mixed (drawn per instance).";

std::string render_function_format() {
  std::ostringstream out;
  out << "A program is a JSON object:\n"
         "{\"category\": <S1|S2|S3|CVRP>, \"description\": <text>, \"version\": 1,\n"
         " \"depot\": <center|corner|random|mixed, CVRP only>, \"root\": <node>}\n"
         "A node is {\"kind\": <primitive>, \"params\": {name: number}, \"weights\": [...], "
         "\"children\": [...]}.\n"
         "The root node produces points in the unit square; the framework clamps them, removes "
         "duplicates and normalizes. Limits: depth <= "
      << kMaxProgramDepth << ", nodes <= " << kMaxProgramNodes << ".\nPrimitives:\n";
  for (std::size_t k = 0; k < kPrimitiveKindCount; ++k) {
    const auto kind = static_cast<PrimitiveKind>(k);
    const KindSpec& spec = kind_spec(kind);
    out << "- " << to_string(kind) << " (children " << spec.min_children << ".." << spec.max_children
        << ")";
    if (kind == PrimitiveKind::kMixture) out << ", weights: one positive number per child";
    for (const auto& p : spec.params) {
      out << "; " << p.name << (p.integer ? " int" : "") << " in [" << format_fixed(p.lo, 3) << ", "
          << format_fixed(p.hi, 3) << "] default " << format_fixed(p.fallback, 3);
    }
    out << "\n";
  }
  return out.str();
}

std::string describe_seed(const GeneratorProgram& seed) {
  return "Seed generator (a working starting point):\n```json\n" + render_program(seed) +
         "\n```\n" + seed.description;
}

std::string guidance_for(ProgramCategory category) {
  switch (category) {
    case ProgramCategory::kS1: return std::string(kGuidanceS1);
    case ProgramCategory::kS2: return std::string(kGuidanceS2);
    case ProgramCategory::kS3: return std::string(kGuidanceS3);
    case ProgramCategory::kCvrp: return std::string(kGuidanceCvrp);
  }
  return {};
}

std::string fitness_label(const ProgramRef& ref) {
  return ref.fitness ? format_fixed(*ref.fitness, 6) : std::string("unevaluated");
}

std::string show_program(const ProgramRef& ref) {
  return "Generator " + ref.id + " (fitness " + fitness_label(ref) + "):\n```json\n" +
         render_program(ref.program) + "\n```\n";
}

/// Orders two parents so the lower fitness comes first.
std::pair<const ProgramRef*, const ProgramRef*> better_worse(const DesignerRequest& r) {
  if (r.programs.size() != 2) {
    throw Error(Errc::kInvalidArgument, std::string(to_string(r.op)) + " needs two programs");
  }
  const ProgramRef& a = r.programs[0];
  const ProgramRef& b = r.programs[1];
  const double fa = a.fitness.value_or(std::numeric_limits<double>::infinity());
  const double fb = b.fitness.value_or(std::numeric_limits<double>::infinity());
  return fb < fa ? std::pair{&b, &a} : std::pair{&a, &b};
}

constexpr std::string_view kAnswerWithProgram =
    "Respond with a single program in one ```json fenced block. Keep the category unchanged.";

std::string trim_copy(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

std::optional<std::string> last_fenced_block(std::string_view text) {
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    auto body = text.find('\n', open + 3);
    if (body == std::string_view::npos) break;
    const auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) break;
    last = std::string(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  return last;
}

std::optional<nlohmann::json> try_parse(const std::string& text) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  return doc;
}

}  // namespace

PromptBundle prompt_bundle(ProgramCategory category) {
  PromptBundle b;
  b.problem_description =
      std::string(category == ProgramCategory::kCvrp ? kProblemCvrp : kProblemTsp);
  b.function_format = render_function_format();
  b.system_generator = std::string(kSystemGenerator);
  b.seed_generator = describe_seed(seed_program(category));
  b.design_guidance = guidance_for(category);
  return b;
}

PromptBundle prompt_bundle(std::string_view category) {
  return prompt_bundle(parse_program_category(category));
}

std::vector<ChatMessage> assemble_prompts(const DesignerRequest& request) {
  PromptBundle bundle = prompt_bundle(request.category);
  const std::string tag = "\n\nRequest " + std::to_string(request.request_id) + ".";
  std::ostringstream user;
  std::string system = bundle.system_generator;
  switch (request.op) {
    case DesignerOp::kInit: {
      if (!request.programs.empty()) bundle.seed_generator = describe_seed(request.programs.front().program);
      user << bundle.problem_description << "\n\n" << bundle.function_format << "\n"
           << bundle.seed_generator << "\n\nDesign guidance: " << bundle.design_guidance
           << "\n\nWrite a new generator for category " << to_string(request.category)
           << ". This is candidate " << request.init_index + 1
           << " of the initial population; make it differ from the seed. " << kAnswerWithProgram;
      break;
    }
    case DesignerOp::kReflect: {
      system = std::string(kSystemReflector);
      const auto [better, worse] = better_worse(request);
      user << bundle.problem_description << "\n\nBetter generator:\n" << show_program(*better)
           << "\nWorse generator:\n" << show_program(*worse)
           << "\nIn at most three sentences, state which structural differences explain why the "
              "better generator scores lower, and what to keep or change next.";
      break;
    }
    case DesignerOp::kCrossover: {
      const auto [better, worse] = better_worse(request);
      user << bundle.problem_description << "\n\n" << bundle.function_format
           << "\nParent generators:\nBetter generator:\n" << show_program(*better)
           << "\nWorse generator:\n" << show_program(*worse) << "\nReflection on this pair:\n"
           << (request.texts.empty() ? std::string() : request.texts.front())
           << "\n\nCombine the parents into one offspring that follows the reflection. "
           << kAnswerWithProgram;
      break;
    }
    case DesignerOp::kLongReflect: {
      system = std::string(kSystemReflector);
      const std::string prior = request.texts.empty() ? std::string() : request.texts.front();
      user << "Previous long-term reflection:\n" << (prior.empty() ? "(none)" : prior)
           << "\n\nNew short-term reflections:\n";
      for (std::size_t i = 1; i < request.texts.size(); ++i) user << "- " << request.texts[i] << "\n";
      user << "\nSynthesize these into updated guidance for designing better generators, in at "
              "most six sentences.";
      break;
    }
    case DesignerOp::kMutate: {
      if (request.programs.empty()) throw Error(Errc::kInvalidArgument, "Mutate needs a program");
      user << bundle.problem_description << "\n\n" << bundle.function_format
           << "\nCurrent best generator:\n" << show_program(request.programs.front())
           << "\nLong-term reflection:\n"
           << (request.texts.empty() ? std::string() : request.texts.front())
           << "\n\nDesign guidance: " << bundle.design_guidance
           << "\n\nModify the current best generator following the reflection. "
           << kAnswerWithProgram;
      break;
    }
  }
  return {{"system", system}, {"user", user.str() + tag}};
}

std::string_view to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::kOff: return "off";
    case CacheMode::kRecord: return "record";
    case CacheMode::kReplay: return "replay";
  }
  return "off";
}

CacheMode parse_cache_mode(std::string_view text) {
  if (text == "off") return CacheMode::kOff;
  if (text == "record") return CacheMode::kRecord;
  if (text == "replay") return CacheMode::kReplay;
  throw Error(Errc::kInvalidArgument, "unknown cache mode " + std::string(text));
}

void DesignerConfig::check() const {
  if (retry_budget < 0) throw Error(Errc::kInvalidArgument, "designer retry budget must be >= 0");
  if (timeout.count() <= 0) throw Error(Errc::kInvalidArgument, "designer timeout must be > 0");
  if (max_in_flight < 1 || max_in_flight > 1024) {
    throw Error(Errc::kInvalidArgument, "designer max_in_flight must be in [1, 1024]");
  }
  if (!(temperature >= 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be >= 0");
  if (cache_mode != CacheMode::kOff && cache_dir.empty()) {
    throw Error(Errc::kInvalidArgument, "cache mode needs a cache directory");
  }
}

nlohmann::json to_json(const DesignerConfig& c) {
  return {{"endpoint", c.endpoint},
          {"model", c.model},
          {"temperature", c.temperature},
          {"timeout_ms", c.timeout.count()},
          {"retry_budget", c.retry_budget},
          {"backoff_initial_ms", c.backoff_initial.count()},
          {"backoff_max_ms", c.backoff_max.count()},
          {"max_in_flight", c.max_in_flight},
          {"api_key_env", c.api_key_env},
          {"cache_mode", std::string(to_string(c.cache_mode))},
          {"cache_dir", c.cache_dir.string()},
          {"log_path", c.log_path.string()}};
}

DesignerConfig designer_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Errc::kInvalidArgument, "designer config must be an object");
  DesignerConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "endpoint") c.endpoint = value.get<std::string>();
      else if (key == "model") c.model = value.get<std::string>();
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "timeout_ms") c.timeout = std::chrono::milliseconds(value.get<std::int64_t>());
      else if (key == "retry_budget") c.retry_budget = value.get<int>();
      else if (key == "backoff_initial_ms") c.backoff_initial = std::chrono::milliseconds(value.get<std::int64_t>());
      else if (key == "backoff_max_ms") c.backoff_max = std::chrono::milliseconds(value.get<std::int64_t>());
      else if (key == "max_in_flight") c.max_in_flight = value.get<int>();
      else if (key == "api_key_env") c.api_key_env = value.get<std::string>();
      else if (key == "cache_mode") c.cache_mode = parse_cache_mode(value.get<std::string>());
      else if (key == "cache_dir") c.cache_dir = value.get<std::string>();
      else if (key == "log_path") c.log_path = value.get<std::string>();
      else throw Error(Errc::kInvalidArgument, "unknown designer config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kInvalidArgument, std::string("designer config: ") + ex.what());
  }
  c.check();
  return c;
}

nlohmann::json chat_request_json(const DesignerConfig& config, const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return body;
}

std::string request_hash(const nlohmann::json& request) { return sha256_hex(request.dump()); }

ChatClient::ChatClient(DesignerConfig config)
    : config_(std::move(config)),
      in_flight_(std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight)) {
  config_.check();
}

void ChatClient::log(const nlohmann::json& entry) {
  if (config_.log_path.empty()) return;
  std::lock_guard lock(log_mutex_);
  std::ofstream out(config_.log_path, std::ios::app);
  out << entry.dump() << "\n";
}

std::string ChatClient::post(const nlohmann::json& body, const std::string& hash) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(Errc::kAuthMissing, "environment variable " + config_.api_key_env + " is not set");
  }
  // Split "scheme://host[:port]/path".
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::kInvalidArgument, "endpoint must be an absolute URL: " + config_.endpoint);
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  const std::string origin = config_.endpoint.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  const std::string payload = body.dump();

  std::string last_error;
  auto delay = config_.backoff_initial;
  for (int attempt = 0; attempt <= config_.retry_budget; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::min(delay * 2, config_.backoff_max);
    }
    in_flight_->acquire();
    auto res = client.Post(path, headers, payload, "application/json");
    in_flight_->release();
    nlohmann::json entry = {{"request_hash", hash}, {"attempt", attempt},
                            {"headers", {{"Authorization", "Bearer ***"}}}};
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      entry["error"] = last_error;
      log(entry);
      continue;
    }
    entry["status"] = res->status;
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      log(entry);
      continue;
    }
    if (res->status != 200) {
      log(entry);
      throw Error(Errc::kDesignerUnavailable, "endpoint returned HTTP " + std::to_string(res->status));
    }
    const auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() || !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content") ||
        !doc["choices"][0]["message"]["content"].is_string()) {
      log(entry);
      throw Error(Errc::kDesignerUnavailable, "malformed chat-completion response");
    }
    const std::string content = doc["choices"][0]["message"]["content"].get<std::string>();
    entry["request"] = body;
    entry["response"] = content;
    log(entry);
    return content;
  }
  throw Error(Errc::kDesignerUnavailable,
              "retry budget exhausted after " + std::to_string(config_.retry_budget + 1) +
                  " attempts: " + last_error);
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) {
  const nlohmann::json body = chat_request_json(config_, messages);
  const std::string hash = request_hash(body);
  const auto cache_file = config_.cache_dir / (hash + ".json");
  if (config_.cache_mode == CacheMode::kReplay) {
    if (!std::filesystem::exists(cache_file)) {
      throw Error(Errc::kDesignerUnavailable, "replay cache has no entry " + hash);
    }
    const auto doc = nlohmann::json::parse(read_text_file(cache_file), nullptr, false);
    if (doc.is_discarded() || !doc.contains("response") || !doc["response"].is_string()) {
      throw Error(Errc::kDesignerUnavailable, "replay cache entry " + hash + " is malformed");
    }
    return doc["response"].get<std::string>();
  }
  std::string text = post(body, hash);
  if (config_.cache_mode == CacheMode::kRecord) {
    std::filesystem::create_directories(config_.cache_dir);
    nlohmann::json entry = {{"request", body}, {"response", text}};
    write_text_file(cache_file, entry.dump(2) + "\n");
  }
  return text;
}

std::string request_completion(const DesignerConfig& config, const std::vector<ChatMessage>& messages) {
  ChatClient client(config);
  return client.complete(messages);
}

GeneratorProgram extract_program(std::string_view text) {
  const auto fenced = last_fenced_block(text);
  const std::string candidate = trim_copy(fenced ? std::string_view(*fenced) : text);
  auto doc = try_parse(candidate);
  if (!doc) {
    const auto open = candidate.find('{');
    const auto close = candidate.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open) {
      doc = try_parse(candidate.substr(open, close - open + 1));
    }
  }
  if (!doc) {
    if (!fenced && candidate.find('{') == std::string::npos) {
      throw Error(Errc::kNoProgramFound, "response contains no JSON program");
    }
    if (!fenced) throw Error(Errc::kNoProgramFound, "no parseable JSON object in the response");
    throw Error(Errc::kInvalidProgram, "fenced block is not a JSON object");
  }
  GeneratorProgram program = program_from_json(*doc);
  if (const auto violations = validate_program(program); !violations.empty()) {
    std::vector<std::string> details;
    for (const auto& v : violations) details.push_back(to_string(v));
    throw Error(Errc::kInvalidProgram, "program fails validation", details);
  }
  return program;
}

DesignerResponse LlmDesigner::complete(const DesignerRequest& request) {
  DesignerResponse response;
  response.text = client_.complete(assemble_prompts(request));
  response.metadata = {{"designer", name()}};
  return response;
}

}  // namespace routegen
