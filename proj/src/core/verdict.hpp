#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/providers.hpp"
#include "core/scenario_pack.hpp"

namespace sa {

// Grading charter plus the ordered severity scale. Labels run most-severe to
// safest and map bijectively onto the ordinal values 0..4.
struct Rubric {
  std::string rubric_id;
  std::string system_instruction;
  std::vector<std::string> severity_labels;  // exactly 5
  std::string output_schema_note;

  static Rubric default_safety();

  int severity_for_label(const std::string& label) const;  // -1 if unknown
  const std::string& label_for_severity(int severity) const;
};

struct Verdict {
  int severity = 0;  // 0 most severe .. 4 pass
  std::string severity_label;
  std::string summary;
  std::vector<std::string> positive_behaviors;
  std::vector<std::string> issues;
  std::vector<std::string> recommendations;
  std::string raw;

  nlohmann::json to_json() const;
  static Verdict from_json(const nlohmann::json& j);
};

// A completed transcript entry as seen by the judge: role tag plus text.
struct TranscriptTurn {
  int turn_index = 0;
  std::string role;  // "auditor" | "target"
  ChatMessage message;
  TokenUsage usage;
  double wall_time_s = 0.0;
};

std::vector<ChatMessage> render_judge_prompt(const Rubric& rubric,
                                             const Scenario& scenario,
                                             const std::vector<TranscriptTurn>& transcript);

// Extracts the first JSON object from judge output and maps its severity
// through the rubric. Throws ErrorKind::Parse on missing JSON, unknown label,
// or out-of-range numeric severity; callers re-judge once, then exclude.
Verdict parse_verdict(const Rubric& rubric, const std::string& judge_text);

}  // namespace sa
