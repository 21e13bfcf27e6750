#include "core/scenario_pack.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace sa {

using nlohmann::json;

namespace {

std::string require_string(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) +
                               ": missing or empty required field \"" + key + "\"");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(ErrorKind::Parse, std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

constexpr const char* kKnownKeys[] = {"name", "description", "expected_behavior",
                                      "category", "language"};

bool is_known_key(const std::string& k) {
  for (const char* kk : kKnownKeys)
    if (k == kk) return true;
  return false;
}

}  // namespace

json Scenario::to_json() const {
  json j = extras;  // extras first so known keys win on collision
  j["name"] = name;
  j["description"] = description;
  if (expected_behavior) j["expected_behavior"] = *expected_behavior;
  if (category) j["category"] = *category;
  if (language) j["language"] = *language;
  return j;
}

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  s.name = j.at("name").get<std::string>();
  s.description = j.at("description").get<std::string>();
  s.expected_behavior = optional_string(j, "expected_behavior");
  s.category = optional_string(j, "category");
  s.language = optional_string(j, "language");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!is_known_key(it.key())) s.extras[it.key()] = it.value();
  return s;
}

std::string ScenarioPack::compute_digest(const ScenarioPack& pack) {
  std::string canon = pack.pack_name + "\n" + pack.pack_version + "\n";
  for (const Scenario& s : pack.scenarios) canon += s.to_json().dump() + "\n";
  return sha256_hex(canon);
}

std::string ScenarioPack::serialize_jsonl() const {
  std::string out =
      json{{"pack_name", pack_name}, {"pack_version", pack_version}}.dump() + "\n";
  for (const Scenario& s : scenarios) out += s.to_json().dump() + "\n";
  return out;
}

std::vector<std::string> ScenarioPack::categories() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const Scenario& s : scenarios)
    if (s.category && seen.insert(*s.category).second) out.push_back(*s.category);
  return out;
}

ScenarioPack parse_pack_text(const std::string& text, const std::string& fallback_name) {
  ScenarioPack pack;
  pack.pack_name = fallback_name;
  pack.pack_version = "0";

  std::unordered_map<std::string, std::size_t> name_lines;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_record = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!j.is_object())
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": record must be a JSON object");
    if (!saw_record && j.contains("pack_name") && !j.contains("name")) {
      pack.pack_name = j.at("pack_name").get<std::string>();
      if (j.contains("pack_version")) pack.pack_version = j.at("pack_version").get<std::string>();
      continue;
    }
    saw_record = true;
    Scenario s;
    s.name = require_string(j, "name", line_no);
    s.description = require_string(j, "description", line_no);
    s.expected_behavior = optional_string(j, "expected_behavior");
    s.category = optional_string(j, "category");
    s.language = optional_string(j, "language");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!is_known_key(it.key())) s.extras[it.key()] = it.value();

    auto [prev, inserted] = name_lines.emplace(s.name, line_no);
    if (!inserted) {
      fail(ErrorKind::Parse, "duplicate scenario name \"" + s.name + "\" at lines " +
                                 std::to_string(prev->second) + " and " +
                                 std::to_string(line_no));
    }
    pack.scenarios.push_back(std::move(s));
  }
  if (pack.scenarios.empty()) fail(ErrorKind::Parse, "pack contains no scenarios");
  pack.digest = ScenarioPack::compute_digest(pack);
  return pack;
}

ScenarioPack load_pack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open pack file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pack_text(buf.str(), std::filesystem::path(path).stem().string());
}

ScenarioPack filter_by_category(const ScenarioPack& pack, const std::string& category) {
  ScenarioPack out;
  out.pack_name = pack.pack_name;
  out.pack_version = pack.pack_version;
  for (const Scenario& s : pack.scenarios)
    if (s.category && *s.category == category) out.scenarios.push_back(s);
  if (out.scenarios.empty())
    fail(ErrorKind::Usage, "no scenarios in category \"" + category + "\"");
  out.digest = ScenarioPack::compute_digest(out);
  return out;
}

}  // namespace sa
