#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/providers.hpp"
#include "core/scenario_pack.hpp"
#include "core/verdict.hpp"

namespace sa {

// The frozen measurement instrument: everything except the target. Changing
// any field yields a new instrument digest and breaks comparability.
struct InstrumentConfig {
  std::string pack_digest;
  std::string pack_name;
  std::string pack_version;
  Rubric rubric = Rubric::default_safety();
  nlohmann::json auditor_descriptor;
  nlohmann::json judge_descriptor;
  int turn_budget = 5;
  SamplingConfig sampling;
  int rerun_count = 10;
  std::uint64_t seed = 0;
  bool auditor_sees_expected_behavior = true;
  int workers = 4;
  RetryPolicy retry;

  nlohmann::json to_json() const;
  static InstrumentConfig from_json(const nlohmann::json& j);

  // Digest over (pack digest, rubric, auditor, judge, turn budget, sampling,
  // rerun count) — the full fixed-assumption set for delta claims.
  std::string instrument_digest() const;
  // Digest without the auditor/judge roles; used when pooling run sets across
  // role levels for variance decomposition.
  std::string protocol_digest() const;
};

enum class RunStatus { Ok, ParseFailure, ProviderFailure };

std::string run_status_name(RunStatus s);
RunStatus run_status_from_name(const std::string& s);

struct RunRecord {
  int schema_version = 1;
  std::string scenario_name;
  std::optional<std::string> scenario_category;
  int rerun_index = 0;
  std::string target_id;
  nlohmann::json instrument_snapshot;
  std::string instrument_digest;
  std::uint64_t cell_seed = 0;
  std::vector<TranscriptTurn> transcript;
  std::optional<Verdict> verdict;
  RunStatus status = RunStatus::Ok;
  std::string failure_reason;
  TokenUsage usage_target;
  TokenUsage usage_auditor;
  TokenUsage usage_judge;
  bool usage_warning = false;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> warnings;

  bool scored() const { return status == RunStatus::Ok && verdict.has_value(); }

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct RunSet {
  InstrumentConfig config;
  std::string target_id;
  std::vector<RunRecord> records;
  std::vector<std::string> load_errors;  // per-record failures during load

  std::string instrument_digest() const { return config.instrument_digest(); }
  std::size_t scored_count() const;
  std::size_t failure_count() const;
};

// Runs one bounded auditor->target loop (exactly turn_budget exchanges) plus
// one judge call. Provider failures and judge parse failures produce
// failure-marked records so the grid slot is preserved.
RunRecord run_scenario(const InstrumentConfig& config, Provider& target,
                       Provider& auditor, Provider& judge, const Scenario& scenario,
                       int rerun_index);

// Full N x n grid for one target. If out_dir is nonempty, each record is
// persisted as it completes and the manifest is finalized at the end.
RunSet run_pack(const InstrumentConfig& config, const nlohmann::json& target_descriptor,
                const ScenarioPack& pack, const std::string& out_dir = {});

void save_runset(const RunSet& runset, const std::string& dir);
RunSet load_runset(const std::string& dir);

}  // namespace sa
