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

#include <atomic>
#include <filesystem>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "routegen/dsl.hpp"
#include "routegen/evolution.hpp"
#include "routegen/random.hpp"
#include "routegen/util.hpp"

namespace routegen::testing {

inline std::filesystem::path data_dir() { return ROUTEGEN_TEST_DATA; }
inline std::filesystem::path fixture(const std::string& name) { return data_dir() / "fixtures" / name; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("routegen_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Local chat-completion endpoint. Generator prompts are answered with a
/// one-node mutation of the first program shown, seeded by the request body;
/// reflection prompts get a short text. The first `fail_first` requests get
/// HTTP 429, and `prose_only` answers every request with plain text.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      last_authorization_ = req.get_header_value("Authorization");
      if (fail_first > 0) {
        --fail_first;
        res.status = 429;
        res.set_content(R"({"error":"rate limited"})", "application/json");
        return;
      }
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", answer(req.body)}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int requests() const { return requests_; }
  std::string last_authorization() const { return last_authorization_; }

  std::atomic<int> fail_first{0};
  std::atomic<bool> prose_only{false};

 private:
  std::string answer(const std::string& body) const {
    if (prose_only) return "I would add more clusters near the border and keep the background sparse.";
    const auto doc = nlohmann::json::parse(body);
    const std::string system = doc["messages"][0]["content"].get<std::string>();
    const std::string user = doc["messages"][1]["content"].get<std::string>();
    const std::string hash = sha256_hex(body);
    if (system.find("reviewer") != std::string::npos) {
      return "Keep the structure of the better generator; vary its spread (" + hash.substr(0, 8) + ").";
    }
    const std::string open = "```json\n";
    for (std::size_t pos = user.find(open); pos != std::string::npos; pos = user.find(open, pos + 1)) {
      const auto start = pos + open.size();
      const auto close = user.find("\n```", start);
      if (close == std::string::npos) break;
      try {
        const GeneratorProgram p = parse_program(user.substr(start, close - start));
        Rng rng(std::stoull(hash.substr(0, 16), nullptr, 16), 0x73747562);
        return "Here is the offspring.\n```json\n" + render_program(mutate_one_node(p, rng)) + "\n```\n";
      } catch (const std::exception&) {
        continue;
      }
    }
    return "No program in the prompt.";
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::string last_authorization_;
};

}  // namespace routegen::testing
