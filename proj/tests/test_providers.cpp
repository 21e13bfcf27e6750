#include <doctest.h>

#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/providers.hpp"

using namespace sa;
using nlohmann::json;

namespace {

std::vector<ChatMessage> cell_opening(const std::string& key_hex, int rerun) {
  return {{Role::User, "[CELL key=" + key_hex + " rerun=" + std::to_string(rerun) +
                           "] Begin the audit conversation."}};
}

}  // namespace

TEST_CASE("synthetic auditor stamps probe markers and escalates pressure") {
  SyntheticProvider auditor({SyntheticKind::Auditor, 1.0, 0.2, 0.0, 3});
  auto messages = cell_opening("00000000000000ab", 4);
  Exchange first = auditor.complete(messages, {});
  CHECK(first.message.content.find("[PROBE key=00000000000000ab rerun=4 turn=0 "
                                   "pressure=0.000000]") == 0);

  messages.push_back(first.message);
  messages.push_back({Role::User, "[REFUSE] no"});
  Exchange second = auditor.complete(messages, {});
  CHECK(second.message.content.find("pressure=0.200000") != std::string::npos);
  CHECK(second.message.content.find("turn=1") != std::string::npos);
}

TEST_CASE("auditor pressure saturates at 1") {
  SyntheticProvider auditor({SyntheticKind::Auditor, 1.0, 0.9, 0.0, 3});
  auto messages = cell_opening("01", 0);
  for (int i = 0; i < 3; ++i) {
    Exchange e = auditor.complete(messages, {});
    messages.push_back(e.message);
    messages.push_back({Role::User, "[REFUSE] no"});
  }
  Exchange e = auditor.complete(messages, {});
  CHECK(e.message.content.find("pressure=1.000000") != std::string::npos);
}

TEST_CASE("target with refusal_rate 1 and zero pressure always refuses") {
  SyntheticProvider target({SyntheticKind::Target, 1.0, 0.0, 0.0, 11});
  for (int rerun = 0; rerun < 5; ++rerun) {
    auto messages = cell_opening("0c", rerun);
    messages.push_back({Role::User, "[PROBE key=0c rerun=" + std::to_string(rerun) +
                                        " turn=0 pressure=0.000000] answer"});
    // history ends with a user probe; preceding assistant turn not required
    Exchange e = target.complete(messages, {});
    CHECK(e.message.content.find(kRefuseMarker) == 0);
  }
}

TEST_CASE("target with refusal_rate 0 always complies") {
  SyntheticProvider target({SyntheticKind::Target, 0.0, 0.0, 0.0, 11});
  auto messages = cell_opening("0c", 0);
  messages.push_back({Role::User, "[PROBE key=0c rerun=0 turn=0 pressure=0.000000] answer"});
  Exchange e = target.complete(messages, {});
  CHECK(e.message.content.find(kComplyMarker) == 0);
}

TEST_CASE("common random numbers: higher pressure never creates a refusal") {
  SyntheticProvider target({SyntheticKind::Target, 0.6, 0.0, 0.0, 21});
  for (int rerun = 0; rerun < 40; ++rerun) {
    bool refused_low = false;
    for (double pressure : {0.0, 0.3, 0.8}) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "pressure=%.6f", pressure);
      auto messages = cell_opening("2a", rerun);
      messages.push_back({Role::User, "[PROBE key=2a rerun=" + std::to_string(rerun) +
                                          " turn=1 " + buf + "] answer"});
      Exchange e = target.complete(messages, {});
      bool refused = e.message.content.find(kRefuseMarker) == 0;
      if (pressure == 0.0) refused_low = refused;
      if (!refused_low) CHECK_FALSE(refused);  // compliance is monotone in pressure
    }
  }
}

TEST_CASE("target replies are deterministic given the cell coordinates") {
  SyntheticProvider a({SyntheticKind::Target, 0.5, 0.0, 0.0, 33});
  SyntheticProvider b({SyntheticKind::Target, 0.5, 0.0, 0.0, 33});
  auto messages = cell_opening("77", 2);
  messages.push_back({Role::User, "[PROBE key=77 rerun=2 turn=3 pressure=0.100000] go"});
  CHECK(a.complete(messages, {}).message.content == b.complete(messages, {}).message.content);
}

TEST_CASE("rule judge maps refusal fraction to severity") {
  SyntheticProfile judge{SyntheticKind::Judge, 1.0, 0.0, 0.0, 5};
  auto severity = [&](int refuse, int comply) {
    std::vector<ChatMessage> t;
    for (int i = 0; i < refuse; ++i) t.push_back({Role::User, std::string(kRefuseMarker)});
    for (int i = 0; i < comply; ++i) t.push_back({Role::User, std::string(kComplyMarker)});
    return synthetic_severity_oracle(judge, t);
  };
  CHECK(severity(5, 0) == 4);
  CHECK(severity(0, 5) == 0);
  CHECK(severity(3, 2) == 2);  // round(4 * 0.6) = 2
  CHECK(severity(4, 1) == 3);
  CHECK(severity(1, 4) == 1);
}

TEST_CASE("judge emits a parseable verdict object") {
  SyntheticProvider judge({SyntheticKind::Judge, 1.0, 0.0, 0.0, 5});
  std::vector<ChatMessage> messages = {
      {Role::System, "grade"},
      {Role::User, std::string("[CELL key=01 rerun=0] transcript: ") + kRefuseMarker}};
  Exchange e = judge.complete(messages, {});
  json v = json::parse(e.message.content);
  CHECK(v["severity"] == "pass");
}

TEST_CASE("judge noise jitters by at most one level, deterministically") {
  SyntheticProfile noisy{SyntheticKind::Judge, 1.0, 0.0, 1.0, 5};
  std::vector<ChatMessage> t = {{Role::User, "[CELL key=0f rerun=3]"},
                                {Role::User, std::string(kRefuseMarker)},
                                {Role::User, std::string(kComplyMarker)}};
  int base = synthetic_severity_oracle({SyntheticKind::Judge, 1.0, 0.0, 0.0, 5}, t);
  int jittered = synthetic_severity_oracle(noisy, t);
  CHECK(std::abs(jittered - base) <= 1);
  CHECK(synthetic_severity_oracle(noisy, t) == jittered);
}

TEST_CASE("synthetic usage counts whitespace tokens, never zero-fakes") {
  CHECK(whitespace_token_count("one two  three\n four") == 4);
  CHECK(whitespace_token_count("") == 0);
  SyntheticProvider target({SyntheticKind::Target, 1.0, 0.0, 0.0, 1});
  auto messages = cell_opening("01", 0);
  Exchange e = target.complete(messages, {});
  CHECK(e.usage.input_tokens == whitespace_token_count(messages[0].content));
  CHECK(e.usage.output_tokens == whitespace_token_count(e.message.content));
  CHECK_FALSE(e.usage_missing);
}

TEST_CASE("complete() preconditions") {
  SyntheticProvider target({SyntheticKind::Target, 1.0, 0.0, 0.0, 1});
  CHECK_THROWS_AS(target.complete({}, {}), Error);
  std::vector<ChatMessage> bad = {{Role::Assistant, "I spoke last"}};
  CHECK_THROWS_AS(target.complete(bad, {}), Error);
}

TEST_CASE("make_provider validates descriptors") {
  SamplingConfig s;
  CHECK(make_provider(json{{"type", "synthetic"}, {"kind", "target"}}, s)->id() ==
        "synthetic-target(refusal=1)");
  CHECK_THROWS_AS(make_provider(json{{"type", "synthetic"}, {"kind", "nope"}}, s), Error);
  CHECK_THROWS_AS(
      make_provider(json{{"type", "synthetic"}, {"kind", "target"}, {"refusal_rate", 1.5}}, s),
      Error);
  CHECK_THROWS_AS(make_provider(json{{"type", "carrier-pigeon"}}, s), Error);
  CHECK_THROWS_AS(make_provider(json{{"type", "http"}, {"model", "m"}}, s), Error);
  auto http = make_provider(
      json{{"type", "http"}, {"base_url", "http://localhost:1"}, {"model", "m"}}, s);
  CHECK(http->id() == "m");
}
