#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/audit_engine.hpp"
#include "core/scoring.hpp"
#include "core/stats.hpp"

namespace sa {

// JSON views of analysis results. Every emitted number stays traceable to
// the instrument digest carried alongside it.
nlohmann::json to_json(const BootstrapCi& ci);
nlohmann::json to_json(const ScoreSummary& s);
nlohmann::json to_json(const DeltaReport& d);
nlohmann::json to_json(const AurocResult& a);
nlohmann::json to_json(const EtaDecomposition& e);
nlohmann::json to_json(const StabilityCurve& c);
nlohmann::json to_json(const AgreementReport& a);
nlohmann::json to_json(const ContrastClassification& c);

struct RoleTokenStats {
  double mean_input = 0.0;
  double sd_input = 0.0;
  double mean_output = 0.0;
  double sd_output = 0.0;
  double share_pct = 0.0;  // of the grand total across roles
};

struct TokenBreakdownReport {
  RoleTokenStats target;
  RoleTokenStats auditor;
  RoleTokenStats judge;
  std::size_t runs = 0;
  bool zero_usage_warning = false;
};

TokenBreakdownReport token_breakdown(std::span<const RunSet* const> runsets);
nlohmann::json to_json(const TokenBreakdownReport& t);

// The enumerated claim contract: each claim with its fixed assumptions and
// the claim it does not license.
nlohmann::json claim_contract_rows();

struct ReportInputs {
  nlohmann::json instrument;  // instrument snapshot incl. digest
  std::string instrument_digest;
  ScoreSummary summary_a;
  ScoreSummary summary_b;
  DeltaReport delta;
  std::map<std::string, ScoreSummary> categories_a;
  std::map<std::string, ScoreSummary> categories_b;
  std::string capability_attestation;  // free text; "unattested" when absent
  // Optional validity-chain evidence; rendered when present.
  nlohmann::json auroc;      // null or AurocResult json
  nlohmann::json variance;   // null or EtaDecomposition json
  nlohmann::json stability;  // null or StabilityCurve json
  nlohmann::json agreement;  // null or AgreementReport json
};

// Assembles the minimum disclosure set (instrument, roles, stability
// evidence, risk measures, non-claims). Refuses when the compared inputs do
// not share an instrument digest or a disclosure group would be empty.
nlohmann::json build_claim_contract_report(const ReportInputs& inputs);
std::string render_report_text(const nlohmann::json& report);

// CSV emission. Kinds: "summary" (target/category rows), "delta",
// "stability" (k, mad, lo, hi), "variance", "tokens".
std::string render_csv(const std::string& kind, const nlohmann::json& result);

// Self-contained SVG charts: "stability" line chart, "variance" and
// "tokens" bar charts.
std::string render_svg(const std::string& kind, const nlohmann::json& result);

}  // namespace sa
