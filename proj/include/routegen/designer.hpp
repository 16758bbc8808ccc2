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

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "routegen/dsl.hpp"
#include "routegen/evolution.hpp"

namespace routegen {

/// The five prompt parts for one program category.
struct PromptBundle {
  std::string problem_description;
  std::string function_format;
  std::string system_generator;
  std::string seed_generator;
  std::string design_guidance;
};

PromptBundle prompt_bundle(ProgramCategory category);
/// Throws kUnknownCategory for names other than S1, S2, S3 and CVRP.
PromptBundle prompt_bundle(std::string_view category);

struct ChatMessage {
  std::string role;
  std::string content;
};

/// System and user messages for one designer request.
std::vector<ChatMessage> assemble_prompts(const DesignerRequest& request);

enum class CacheMode { kOff, kRecord, kReplay };

std::string_view to_string(CacheMode mode);
CacheMode parse_cache_mode(std::string_view text);

struct DesignerConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "o3";
  double temperature = 1.0;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  int retry_budget = 4;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{std::chrono::seconds(16)};
  int max_in_flight = 4;
  std::string api_key_env = "OPENAI_API_KEY";
  CacheMode cache_mode = CacheMode::kOff;
  std::filesystem::path cache_dir;
  /// JSON-lines request log; credentials are never written.
  std::filesystem::path log_path;

  void check() const;
};

nlohmann::json to_json(const DesignerConfig& config);
DesignerConfig designer_config_from_json(const nlohmann::json& doc);

/// Chat-completion request body {model, temperature, messages}.
nlohmann::json chat_request_json(const DesignerConfig& config, const std::vector<ChatMessage>& messages);

/// SHA-256 of the compact request body; names the replay cache file.
std::string request_hash(const nlohmann::json& request);

/// Sends the request with retries on transport errors, 429 and 5xx, or serves
/// it from the replay cache. Throws kAuthMissing before any network call when
/// the credential variable is unset, kDesignerUnavailable when retries run
/// out or a replay entry is missing.
class ChatClient {
 public:
  explicit ChatClient(DesignerConfig config);
  std::string complete(const std::vector<ChatMessage>& messages);
  const DesignerConfig& config() const { return config_; }

 private:
  std::string post(const nlohmann::json& body, const std::string& hash);
  void log(const nlohmann::json& entry);

  DesignerConfig config_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
  std::mutex log_mutex_;
};

std::string request_completion(const DesignerConfig& config, const std::vector<ChatMessage>& messages);

/// Takes the last fenced block (or the whole message), parses it as a
/// program and validates it. One repair pass trims text around the outermost
/// braces. Throws kNoProgramFound or kInvalidProgram (violations in details).
GeneratorProgram extract_program(std::string_view text);

/// Designer backed by a chat-completion endpoint.
class LlmDesigner final : public Designer {
 public:
  explicit LlmDesigner(DesignerConfig config) : client_(std::move(config)) {}
  DesignerResponse complete(const DesignerRequest& request) override;
  std::string name() const override { return "llm:" + client_.config().model; }

 private:
  ChatClient client_;
};

}  // namespace routegen
