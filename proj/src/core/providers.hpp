#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sa {

enum class Role { System, User, Assistant };

std::string role_name(Role r);
Role role_from_name(const std::string& s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

// Defaults match the pinned shared configuration recorded with every run.
struct SamplingConfig {
  double temperature = 0.7;
  double top_p = 0.8;
  int top_k = 20;
  double presence_penalty = 1.5;
  double repeat_penalty = 1.0;
  bool thinking = false;

  nlohmann::json to_json() const;
  static SamplingConfig from_json(const nlohmann::json& j);
};

struct TokenUsage {
  long long input_tokens = 0;
  long long output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  long long total() const { return input_tokens + output_tokens; }
};

struct Exchange {
  ChatMessage message;
  TokenUsage usage;
  bool usage_missing = false;  // server omitted usage; zeros recorded, never fabricated
  int attempts = 1;
};

struct ModelEndpoint {
  std::string base_url;
  std::string model_id;
  std::optional<std::string> api_key_ref;  // environment variable name
  SamplingConfig sampling;
};

struct RetryPolicy {
  int max_attempts = 3;
  int initial_backoff_ms = 250;
  double multiplier = 2.0;
};

enum class SyntheticKind { Target, Auditor, Judge };

// Deterministic stand-ins for the three roles. Output is a pure function of
// (profile, seed, message history), so full runs replay bit-identically.
struct SyntheticProfile {
  SyntheticKind kind = SyntheticKind::Target;
  double refusal_rate = 1.0;   // target: chance of refusing at zero pressure
  double pressure_gain = 0.0;  // auditor: per-turn escalation of probing pressure
  double noise = 0.0;          // judge: chance of +-1 severity jitter
  std::uint64_t seed = 0;
};

// Marker tokens used by the synthetic stack. The auditor stamps each probe
// with the cell coordinates and current pressure; the target and judge read
// them back so every draw is keyed by (seed, scenario, rerun, turn) and
// parallel execution is order-independent.
inline constexpr const char* kRefuseMarker = "[REFUSE]";
inline constexpr const char* kComplyMarker = "[COMPLY]";

class Provider {
 public:
  virtual ~Provider() = default;
  virtual Exchange complete(std::span<const ChatMessage> messages,
                            const SamplingConfig& sampling) = 0;
  virtual std::string id() const = 0;
};

class HttpProvider : public Provider {
 public:
  HttpProvider(ModelEndpoint endpoint, RetryPolicy retry = {});
  Exchange complete(std::span<const ChatMessage> messages,
                    const SamplingConfig& sampling) override;
  std::string id() const override { return endpoint_.model_id; }

 private:
  ModelEndpoint endpoint_;
  RetryPolicy retry_;
};

class SyntheticProvider : public Provider {
 public:
  explicit SyntheticProvider(SyntheticProfile profile) : profile_(profile) {}
  Exchange complete(std::span<const ChatMessage> messages,
                    const SamplingConfig& sampling) override;
  std::string id() const override;

  const SyntheticProfile& profile() const { return profile_; }

 private:
  SyntheticProfile profile_;
};

// Rule-based severity for a transcript of target turns carrying the
// refusal/compliance markers: all refused -> 4, all complied -> 0, mixed ->
// round(4 * refusal fraction), then +-1 jitter with probability `noise`.
int synthetic_severity_oracle(const SyntheticProfile& judge,
                              const std::vector<ChatMessage>& transcript);

long long whitespace_token_count(std::string_view text);

// Builds a provider from a JSON descriptor:
//   {"type":"http","base_url":...,"model":...,"api_key_env":...}
//   {"type":"synthetic","kind":"target|auditor|judge",...profile fields...}
std::unique_ptr<Provider> make_provider(const nlohmann::json& descriptor,
                                        const SamplingConfig& sampling,
                                        const RetryPolicy& retry = {});

}  // namespace sa
