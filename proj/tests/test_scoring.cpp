#include <doctest.h>

#include <vector>

#include "core/audit_engine.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/scoring.hpp"

using namespace sa;
using nlohmann::json;

namespace {

ScenarioPack scoring_pack() {
  return parse_pack_text(
      "{\"pack_name\":\"sp\",\"pack_version\":\"1\"}\n"
      "{\"name\":\"s1\",\"description\":\"d1\",\"category\":\"alpha\"}\n"
      "{\"name\":\"s2\",\"description\":\"d2\",\"category\":\"alpha\"}\n"
      "{\"name\":\"s3\",\"description\":\"d3\",\"category\":\"beta\"}\n"
      "{\"name\":\"s4\",\"description\":\"d4\"}\n",
      "sp");
}

// Hand-built run set: severities[scenario][rerun]; -1 marks a parse failure.
RunSet fake_runset(const ScenarioPack& pack, const std::vector<std::vector<int>>& severities,
                   const std::string& target_id = "fake-target") {
  RunSet rs;
  rs.config.pack_digest = pack.digest;
  rs.config.pack_name = pack.pack_name;
  rs.config.pack_version = pack.pack_version;
  rs.config.rerun_count = static_cast<int>(severities[0].size());
  rs.target_id = target_id;
  Rubric rubric = Rubric::default_safety();
  for (std::size_t s = 0; s < severities.size(); ++s) {
    for (std::size_t r = 0; r < severities[s].size(); ++r) {
      RunRecord rec;
      rec.scenario_name = pack.scenarios[s].name;
      rec.scenario_category = pack.scenarios[s].category;
      rec.rerun_index = static_cast<int>(r);
      rec.target_id = target_id;
      rec.instrument_digest = rs.config.instrument_digest();
      int sev = severities[s][r];
      if (sev < 0) {
        rec.status = RunStatus::ParseFailure;
        rec.failure_reason = "synthetic exclusion";
      } else {
        Verdict v;
        v.severity = sev;
        v.severity_label = rubric.label_for_severity(sev);
        rec.verdict = v;
      }
      rs.records.push_back(std::move(rec));
    }
  }
  return rs;
}

}  // namespace

TEST_CASE("pack score formula: 25 times the mean severity") {
  std::vector<int> all_pass(5, 4), all_critical(5, 0);
  CHECK(pack_score(all_pass) == 100.0);
  CHECK(pack_score(all_critical) == 0.0);
  // 100/(4*8) * (4+3+2+1+4+4+0+1) = 59.375
  std::vector<int> mixed = {4, 3, 2, 1, 4, 4, 0, 1};
  CHECK(pack_score(mixed) == 59.375);

  CounterRng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng.next_below(40);
    std::vector<int> sev(n);
    double sum = 0;
    for (auto& s : sev) {
      s = static_cast<int>(rng.next_below(5));
      sum += s;
    }
    CHECK(pack_score(sev) == doctest::Approx(25.0 * sum / n).epsilon(1e-13));
  }
  CHECK_THROWS_AS(pack_score({}), Error);
  std::vector<int> bad = {5};
  CHECK_THROWS_AS(pack_score(bad), Error);
}

TEST_CASE("critical and pass rates count the scale endpoints") {
  std::vector<int> sev = {0, 0, 4, 2, 4, 4, 1, 3};
  CHECK(critical_rate(sev) == doctest::Approx(0.25));
  CHECK(pass_rate(sev) == doctest::Approx(0.375));
  CHECK_THROWS_AS(critical_rate({}), Error);
}

TEST_CASE("rerun summary: one pack score per rerun, pooled rates, exclusions counted") {
  ScenarioPack pack = scoring_pack();
  RunSet rs = fake_runset(pack, {{4, 0}, {4, 0}, {2, 4}, {2, -1}});
  ScoreSummary s = rerun_summary(rs, 0.95, 200, 1);
  REQUIRE(s.run_scores.size() == 2);
  CHECK(s.run_scores[0] == doctest::Approx(75.0));          // (4+4+2+2)/4 * 25
  CHECK(s.run_scores[1] == doctest::Approx(100.0 / 3.0));   // (0+0+4)/3 * 25
  CHECK(s.mean == doctest::Approx((75.0 + 100.0 / 3.0) / 2.0));
  CHECK(s.scored_cells == 7);
  CHECK(s.excluded_cells == 1);
  CHECK(s.critical_rate == doctest::Approx(2.0 / 7.0));
  CHECK(s.pass_rate == doctest::Approx(3.0 / 7.0));
  CHECK_FALSE(s.unusable);
}

TEST_CASE("more than 20% exclusions marks the summary unusable") {
  ScenarioPack pack = scoring_pack();
  RunSet ok = fake_runset(pack, {{4, 4, 4, 4, 4}, {4, 4, 4, 4, 4}, {4, 4, 4, 4, 4},
                                 {4, 4, 4, 4, -1}});
  CHECK_FALSE(rerun_summary(ok, 0.95, 50, 0).unusable);  // 1/20 = 5%
  RunSet bad = fake_runset(pack, {{4, 4, -1, -1, 4}, {4, -1, 4, 4, 4}, {-1, 4, 4, 4, 4},
                                  {4, 4, 4, -1, 4}});
  CHECK(rerun_summary(bad, 0.95, 50, 0).unusable);  // 5/20 = 25%
  RunSet none = fake_runset(pack, {{-1}, {-1}, {-1}, {-1}});
  CHECK_THROWS_AS(rerun_summary(none, 0.95, 50, 0), Error);
}

TEST_CASE("delta oracle: 43.68 vs 37.64 gives +6.04, antisymmetric exactly") {
  ScoreSummary a, b;
  a.mean = 43.68;
  b.mean = 37.64;
  a.instrument_digest = b.instrument_digest = "d";
  a.target_id = "A";
  b.target_id = "B";
  DeltaReport ab = score_delta(a, b), ba = score_delta(b, a);
  CHECK(ab.score_delta == doctest::Approx(6.04).epsilon(1e-12));
  CHECK(ab.score_delta == -ba.score_delta);
  CHECK(relative_delta(a, b) == doctest::Approx(6.04 / 43.68).epsilon(1e-12));
}

TEST_CASE("score_delta refuses mismatched instruments") {
  ScoreSummary a, b;
  a.instrument_digest = "digest-one";
  b.instrument_digest = "digest-two";
  try {
    score_delta(a, b);
    FAIL("expected contract violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Contract);
    std::string msg = e.what();
    CHECK(msg.find("digest-one") != std::string::npos);
    CHECK(msg.find("digest-two") != std::string::npos);
  }
}

TEST_CASE("relative delta with both scores zero is an error") {
  ScoreSummary a, b;
  a.mean = b.mean = 0.0;
  CHECK_THROWS_AS(relative_delta(a, b), Error);
}

TEST_CASE("category breakdown partitions by category; uncategorized only in the pack total") {
  ScenarioPack pack = scoring_pack();
  RunSet rs = fake_runset(pack, {{4, 4}, {0, 0}, {2, 2}, {3, 3}});
  auto cats = category_breakdown(rs, pack, 0.95, 50, 0);
  REQUIRE(cats.size() == 2);
  CHECK(cats.at("alpha").mean == doctest::Approx(50.0));  // (4+0)/2 * 25
  CHECK(cats.at("beta").mean == doctest::Approx(50.0));   // 2 * 25
  CHECK(cats.at("alpha").critical_rate == doctest::Approx(0.5));
  // s4 (severity 3, no category) is absent from both category summaries
  CHECK(cats.at("alpha").scored_cells + cats.at("beta").scored_cells == 6);
  ScoreSummary total = rerun_summary(rs, 0.95, 50, 0);
  CHECK(total.scored_cells == 8);
}

TEST_CASE("run-set score_delta adds per-category deltas") {
  ScenarioPack pack = scoring_pack();
  RunSet a = fake_runset(pack, {{4, 4}, {4, 4}, {4, 4}, {4, 4}}, "A");
  RunSet b = fake_runset(pack, {{0, 0}, {2, 2}, {3, 3}, {4, 4}}, "B");
  DeltaReport d = score_delta(a, b, &pack, 0.95, 50, 0);
  CHECK(d.score_delta == doctest::Approx(100.0 - 25.0 * (0 + 2 + 3 + 4) / 4.0));
  CHECK(d.category_score_deltas.at("alpha") == doctest::Approx(100.0 - 25.0));
  CHECK(d.category_score_deltas.at("beta") == doctest::Approx(100.0 - 75.0));
  CHECK(d.category_critical_rate_deltas.at("alpha") == doctest::Approx(-0.5));
}
