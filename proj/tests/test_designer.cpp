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

#include <gtest/gtest.h>

#include <cstdlib>

#include "routegen/designer.hpp"
#include "test_support.hpp"

namespace routegen {
namespace {

using testing::scratch_dir;
using testing::StubServer;

constexpr const char* kKeyVar = "ROUTEGEN_TEST_API_KEY";

DesignerConfig stub_config(const StubServer& server) {
  DesignerConfig c;
  c.endpoint = server.endpoint();
  c.model = "stub";
  c.api_key_env = kKeyVar;
  c.timeout = std::chrono::seconds(5);
  c.backoff_initial = std::chrono::milliseconds(1);
  c.backoff_max = std::chrono::milliseconds(4);
  return c;
}

std::vector<ChatMessage> hello() { return {{"system", "s"}, {"user", "Write a generator."}}; }

class DesignerTest : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv(kKeyVar, "sk-test-secret", 1); }
  void TearDown() override { ::unsetenv(kKeyVar); }
};

TEST(Prompts, BundlesPerCategory) {
  for (const char* name : {"S1", "S2", "S3", "CVRP"}) {
    const PromptBundle b = prompt_bundle(name);
    EXPECT_FALSE(b.problem_description.empty());
    EXPECT_NE(b.function_format.find("MotifReplicate"), std::string::npos);
    EXPECT_NE(b.seed_generator.find("```json"), std::string::npos);
    EXPECT_FALSE(b.system_generator.empty());
    EXPECT_FALSE(b.design_guidance.empty());
  }
  EXPECT_NE(prompt_bundle("CVRP").problem_description, prompt_bundle("S1").problem_description);
  try {
    prompt_bundle("S7");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnknownCategory);
  }
}

TEST(Prompts, CrossoverLabelsLowerFitnessAsBetter) {
  DesignerRequest r;
  r.op = DesignerOp::kCrossover;
  r.category = ProgramCategory::kS3;
  r.request_id = 12;
  r.programs = {{"worse-one", seed_program(ProgramCategory::kS3), 0.9},
                {"better-one", seed_program(ProgramCategory::kS1), 0.2}};
  r.texts = {"keep the clusters"};
  const auto msgs = assemble_prompts(r);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].role, "system");
  const std::string& u = msgs[1].content;
  EXPECT_LT(u.find("Better generator:\nGenerator better-one"), u.find("Worse generator:\nGenerator worse-one"));
  EXPECT_NE(u.find("keep the clusters"), std::string::npos);
  EXPECT_NE(u.find("Request 12."), std::string::npos);
}

TEST(Prompts, EveryOperationAssembles) {
  for (auto op : {DesignerOp::kInit, DesignerOp::kReflect, DesignerOp::kCrossover, DesignerOp::kLongReflect,
                  DesignerOp::kMutate}) {
    DesignerRequest r;
    r.op = op;
    r.category = ProgramCategory::kCvrp;
    r.programs = {{"a", seed_program(ProgramCategory::kCvrp), 0.1}, {"b", seed_program(ProgramCategory::kCvrp), 0.2}};
    r.texts = {"", "short one"};
    const auto msgs = assemble_prompts(r);
    EXPECT_FALSE(msgs[1].content.empty()) << to_string(op);
  }
}

TEST(Extract, FencedBareAndRepaired) {
  const std::string prog = render_program(seed_program(ProgramCategory::kS2));
  EXPECT_EQ(extract_program("Sure.\n```json\n" + prog + "\n```\nDone."), seed_program(ProgramCategory::kS2));
  EXPECT_EQ(extract_program(prog), seed_program(ProgramCategory::kS2));
  EXPECT_EQ(extract_program("Here you go: " + prog + " hope it helps"), seed_program(ProgramCategory::kS2));
  // The last fenced block wins.
  const std::string other = render_program(seed_program(ProgramCategory::kS3));
  EXPECT_EQ(extract_program("```json\n" + prog + "\n```\nrevised:\n```json\n" + other + "\n```"),
            seed_program(ProgramCategory::kS3));
}

TEST(Extract, Errors) {
  auto code = [](const std::string& text) {
    try {
      extract_program(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kIo;
  };
  EXPECT_EQ(code("I think clusters would help here."), Errc::kNoProgramFound);
  EXPECT_EQ(code("```json\nnot json at all\n```"), Errc::kInvalidProgram);
  auto bad = seed_program(ProgramCategory::kS3);
  bad.root.children[0].params["sigma"] = 9.0;
  try {
    extract_program("```json\n" + render_program(bad) + "\n```");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidProgram);
    ASSERT_FALSE(e.details().empty());
    EXPECT_NE(e.details()[0].find("sigma"), std::string::npos);
  }
}

TEST(Config, JsonRoundTripAndChecks) {
  DesignerConfig c;
  c.cache_mode = CacheMode::kRecord;
  c.cache_dir = "/tmp/cache";
  c.timeout = std::chrono::milliseconds(2500);
  const auto back = designer_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(designer_config_from_json({{"api_key", "sk"}}), Error);
  c.max_in_flight = 0;
  EXPECT_THROW(c.check(), Error);
  EXPECT_EQ(parse_cache_mode("replay"), CacheMode::kReplay);
  EXPECT_THROW(parse_cache_mode("sometimes"), Error);
  // The credential itself never appears in the config document.
  EXPECT_EQ(to_json(DesignerConfig{}).dump().find("sk-"), std::string::npos);
}

TEST(Hash, StableOverRequestBody) {
  const DesignerConfig c;
  const auto a = chat_request_json(c, hello());
  EXPECT_EQ(request_hash(a), request_hash(chat_request_json(c, hello())));
  auto msgs = hello();
  msgs[1].content += " ";
  EXPECT_NE(request_hash(a), request_hash(chat_request_json(c, msgs)));
  EXPECT_EQ(request_hash(a).size(), 64u);
}

TEST_F(DesignerTest, SucceedsAndSendsBearer) {
  StubServer server;
  const std::string text = request_completion(stub_config(server), hello());
  EXPECT_EQ(text, "No program in the prompt.");
  EXPECT_EQ(server.last_authorization(), "Bearer sk-test-secret");
}

TEST_F(DesignerTest, RetriesThenSucceedsOn429) {
  StubServer server;
  server.fail_first = 2;
  const std::string text = request_completion(stub_config(server), hello());
  EXPECT_FALSE(text.empty());
  EXPECT_EQ(server.requests(), 3);
}

TEST_F(DesignerTest, RetryBudgetExhausted) {
  StubServer server;
  server.fail_first = 100;
  auto cfg = stub_config(server);
  cfg.retry_budget = 2;
  try {
    request_completion(cfg, hello());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDesignerUnavailable);
  }
  EXPECT_EQ(server.requests(), 3);
}

TEST_F(DesignerTest, TransportErrorIsRetriedThenUnavailable) {
  DesignerConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.api_key_env = kKeyVar;
  cfg.retry_budget = 1;
  cfg.backoff_initial = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(1);
  try {
    request_completion(cfg, hello());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDesignerUnavailable);
  }
}

TEST(Auth, MissingKeyFailsBeforeNetwork) {
  StubServer server;
  ::unsetenv(kKeyVar);
  try {
    request_completion(stub_config(server), hello());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kAuthMissing);
  }
  EXPECT_EQ(server.requests(), 0);
}

TEST_F(DesignerTest, RecordReplayAndLogRedaction) {
  StubServer server;
  const auto dir = scratch_dir("designer_cache");
  auto cfg = stub_config(server);
  cfg.cache_mode = CacheMode::kRecord;
  cfg.cache_dir = dir / "cache";
  cfg.log_path = dir / "requests.jsonl";
  const std::string recorded = request_completion(cfg, hello());
  const auto hash = request_hash(chat_request_json(cfg, hello()));
  EXPECT_TRUE(std::filesystem::exists(cfg.cache_dir / (hash + ".json")));

  const std::string log = read_text_file(cfg.log_path);
  EXPECT_EQ(log.find("sk-test-secret"), std::string::npos);
  EXPECT_NE(log.find("Bearer ***"), std::string::npos);

  ::unsetenv(kKeyVar);
  cfg.cache_mode = CacheMode::kReplay;
  cfg.endpoint = "http://127.0.0.1:1/unreachable";
  EXPECT_EQ(request_completion(cfg, hello()), recorded);
  EXPECT_EQ(server.requests(), 1);
  auto other = hello();
  other[1].content = "Something new.";
  try {
    request_completion(cfg, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDesignerUnavailable);
  }
}

TEST_F(DesignerTest, LlmDesignerDrivesEvolution) {
  StubServer server;
  LlmDesigner designer(stub_config(server));
  EvolutionConfig cfg;
  cfg.init_population = 6;
  cfg.offspring_per_iteration = 4;
  cfg.max_iterations = 2;
  cfg.max_evaluations = 20;
  FitnessFn fitness = [](const GeneratorProgram& p, std::uint64_t) {
    FitnessReport r;
    r.score = static_cast<double>(std::stoull(program_hash(p).substr(0, 6), nullptr, 16)) / 16777216.0;
    return r;
  };
  const auto report = evolve(cfg, designer, fitness, ProgramCategory::kS2);
  ASSERT_TRUE(report.best);
  EXPECT_EQ(report.iterations[0].population.size(), 6u);
  EXPECT_GT(server.requests(), 6);
}

TEST_F(DesignerTest, ProseAnswersBecomeFailures) {
  StubServer server;
  server.prose_only = true;
  LlmDesigner designer(stub_config(server));
  DesignerRequest r;
  r.op = DesignerOp::kMutate;
  r.programs = {{"a", seed_program(ProgramCategory::kS3), 0.5}};
  try {
    extract_program(designer.complete(r).text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoProgramFound);
  }
}

}  // namespace
}  // namespace routegen
