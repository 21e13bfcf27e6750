#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sa {

// One deployment concern. Unknown extra fields from the JSONL record are
// preserved in `extras` and round-tripped, but never validated.
struct Scenario {
  std::string name;
  std::string description;
  std::optional<std::string> expected_behavior;
  std::optional<std::string> category;
  std::optional<std::string> language;
  nlohmann::json extras = nlohmann::json::object();

  nlohmann::json to_json() const;
  static Scenario from_json(const nlohmann::json& j);
};

// Immutable after load; safe to share across audit workers.
struct ScenarioPack {
  std::string pack_name;
  std::string pack_version;
  std::vector<Scenario> scenarios;
  std::string digest;  // hex SHA-256 over the canonical serialization

  std::size_t size() const { return scenarios.size(); }

  // Recomputes the digest from (pack_name, pack_version, ordered scenarios).
  // Order-sensitive: a reordered pack is a different instrument.
  static std::string compute_digest(const ScenarioPack& pack);

  std::string serialize_jsonl() const;
  std::vector<std::string> categories() const;  // distinct, in first-seen order
};

// Parses a JSONL pack file. The first line may be a pack header object
// carrying "pack_name"/"pack_version"; every other non-empty line must be a
// scenario record with nonempty "name" and "description".
ScenarioPack load_pack(const std::string& path);
ScenarioPack parse_pack_text(const std::string& text, const std::string& fallback_name);

ScenarioPack filter_by_category(const ScenarioPack& pack, const std::string& category);

}  // namespace sa
