#include <doctest.h>

#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/reporting.hpp"

using namespace sa;
using nlohmann::json;

namespace {

ScoreSummary summary(const std::string& target, double mean, const std::string& digest) {
  ScoreSummary s;
  s.target_id = target;
  s.mean = mean;
  s.sd = 2.0;
  s.ci = {mean - 3, mean + 3, 0.95, 1000};
  s.run_scores = {mean - 1, mean, mean + 1};
  s.critical_rate = 0.1;
  s.pass_rate = 0.3;
  s.scored_cells = 30;
  s.instrument_digest = digest;
  return s;
}

ReportInputs sample_inputs() {
  ReportInputs in;
  in.instrument_digest = "deadbeef";
  in.instrument = json{{"pack_name", "p"},
                       {"pack_version", "1"},
                       {"pack_digest", "pd"},
                       {"turn_budget", 5},
                       {"rerun_count", 10},
                       {"auditor", "aud"},
                       {"judge", "jud"}};
  in.summary_a = summary("A", 60.0, "deadbeef");
  in.summary_b = summary("B", 40.0, "deadbeef");
  in.delta = score_delta(in.summary_a, in.summary_b);
  in.delta.category_score_deltas["cat1"] = 12.5;
  in.delta.category_critical_rate_deltas["cat1"] = -0.2;
  return in;
}

}  // namespace

TEST_CASE("token breakdown worked example") {
  RunSet rs;
  RunRecord r1, r2;
  r1.usage_target = {10, 5};
  r2.usage_target = {30, 15};
  r1.usage_auditor = {0, 0};
  r2.usage_auditor = {0, 0};
  rs.records = {r1, r2};
  const RunSet* sets[] = {&rs};
  TokenBreakdownReport t = token_breakdown(sets);
  CHECK(t.target.mean_input == doctest::Approx(20.0));
  CHECK(t.target.mean_output == doctest::Approx(10.0));
  CHECK(t.target.share_pct == doctest::Approx(100.0));  // only role with tokens
  CHECK(t.auditor.share_pct == 0.0);
  CHECK(t.runs == 2);
  CHECK_FALSE(t.zero_usage_warning);
}

TEST_CASE("all-zero usage renders with a warning, no division by zero") {
  RunSet rs;
  rs.records.resize(3);
  const RunSet* sets[] = {&rs};
  TokenBreakdownReport t = token_breakdown(sets);
  CHECK(t.zero_usage_warning);
  CHECK(t.target.share_pct == 0.0);
  CHECK(t.judge.share_pct == 0.0);
  CHECK_THROWS_AS(token_breakdown({}), Error);
}

TEST_CASE("report carries all five disclosure groups and the claim contract") {
  json report = build_claim_contract_report(sample_inputs());
  for (const char* group :
       {"instrument", "roles", "stability_evidence", "risk_measures", "non_claims"})
    CHECK(report.contains(group));
  REQUIRE(report["claim_contract"].size() == 4);
  std::string text = render_report_text(report);
  CHECK(text.find("One target scores higher or lower than another.") != std::string::npos);
  CHECK(text.find("Universal safety or superiority under a different instrument.") !=
        std::string::npos);
  CHECK(text.find("Same severity scale and critical-failure definition across reruns.") !=
        std::string::npos);
  CHECK(text.find("A judge-independent ground truth label in domains where no such labels "
                  "exist.") != std::string::npos);
  CHECK(text.find("deadbeef") != std::string::npos);
  CHECK(text.find("cat1") != std::string::npos);
}

TEST_CASE("report is deterministic") {
  ReportInputs in = sample_inputs();
  json a = build_claim_contract_report(in);
  json b = build_claim_contract_report(in);
  CHECK(a.dump() == b.dump());
  CHECK(render_report_text(a) == render_report_text(b));
}

TEST_CASE("report refuses mismatched instrument digests, printing both") {
  ReportInputs in = sample_inputs();
  in.summary_b.instrument_digest = "cafebabe";
  try {
    build_claim_contract_report(in);
    FAIL("expected contract violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Contract);
    std::string msg = e.what();
    CHECK(msg.find("deadbeef") != std::string::npos);
    CHECK(msg.find("cafebabe") != std::string::npos);
  }
}

TEST_CASE("missing attestation is explicitly marked, not dropped") {
  json report = build_claim_contract_report(sample_inputs());
  CHECK(report["roles"]["capability_ordering_attestation"] == "unattested");
  CHECK(report["stability_evidence"]["mad_curve"] == "missing");
  ReportInputs in = sample_inputs();
  in.capability_attestation = "B is the larger checkpoint of the same family";
  in.stability = json{{"points", json::array()}};
  json attested = build_claim_contract_report(in);
  CHECK(attested["roles"]["capability_ordering_attestation"] ==
        "B is the larger checkpoint of the same family");
  CHECK(attested["stability_evidence"]["mad_curve"].is_object());
}

TEST_CASE("csv rendering") {
  ScoreSummary s = summary("A", 60.0, "d");
  std::string csv = render_csv("summary", to_json(s));
  CHECK(csv.find("scope,target_id,mean") == 0);
  CHECK(csv.find("pack,A,60") != std::string::npos);

  StabilityCurve curve;
  curve.points = {{1, 4.5, 1.0, 9.0}, {2, 3.0, 0.5, 6.0}};
  std::string scsv = render_csv("stability", to_json(curve));
  CHECK(scsv == "k,mad,envelope_lo,envelope_hi\n1,4.5,1,9\n2,3,0.5,6\n");

  CHECK_THROWS_AS(render_csv("unknown-kind", json::object()), Error);
}

TEST_CASE("csv escapes commas and quotes in identifiers") {
  ScoreSummary s = summary("model \"x\", 7b", 10.0, "d");
  std::string csv = render_csv("summary", to_json(s));
  CHECK(csv.find("\"model \"\"x\"\", 7b\"") != std::string::npos);
}

TEST_CASE("svg charts are self-contained documents") {
  StabilityCurve curve;
  curve.points = {{1, 4.5, 1.0, 9.0}, {2, 3.0, 0.5, 6.0}, {3, 2.0, 0.2, 4.0}};
  std::string svg = render_svg("stability", to_json(curve));
  CHECK(svg.find("<svg xmlns=") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);

  EtaDecomposition e;
  e.factors = {{"target", 10, 0.8, {}, false}, {"auditor", 1, 0.1, {}, false}};
  std::string bar = render_svg("variance", to_json(e));
  CHECK(bar.find("<rect") != std::string::npos);
  CHECK_THROWS_AS(render_svg("unknown-kind", json::object()), Error);
}
