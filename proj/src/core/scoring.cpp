#include "core/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "core/errors.hpp"

namespace sa {

namespace {

constexpr double kUnusableExclusionFraction = 0.20;

double sd_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

ScoreSummary summarize_records(const std::vector<const RunRecord*>& records,
                               int rerun_count, const std::string& digest,
                               const std::string& target_id, double ci_level,
                               int resamples, std::uint64_t seed) {
  // Per-rerun severities, then CR/pass pooled over all scored cells.
  std::vector<std::vector<int>> by_rerun(rerun_count);
  std::vector<int> pooled;
  std::size_t excluded = 0;
  for (const RunRecord* r : records) {
    if (r->rerun_index < 0 || r->rerun_index >= rerun_count)
      fail(ErrorKind::Parse, "record rerun index outside the instrument grid");
    if (!r->scored()) {
      ++excluded;
      continue;
    }
    by_rerun[r->rerun_index].push_back(r->verdict->severity);
    pooled.push_back(r->verdict->severity);
  }
  if (pooled.empty()) fail(ErrorKind::Usage, "run set has zero scored cells");

  ScoreSummary s;
  s.instrument_digest = digest;
  s.target_id = target_id;
  s.scored_cells = pooled.size();
  s.excluded_cells = excluded;
  s.unusable = static_cast<double>(excluded) >
               kUnusableExclusionFraction * static_cast<double>(records.size());

  for (const auto& severities : by_rerun)
    if (!severities.empty()) s.run_scores.push_back(pack_score(severities));
  s.mean = std::accumulate(s.run_scores.begin(), s.run_scores.end(), 0.0) /
           static_cast<double>(s.run_scores.size());
  s.sd = sd_of(s.run_scores);
  s.ci = bootstrap_percentile_ci(s.run_scores, ci_level, resamples, seed);
  s.critical_rate = critical_rate(pooled);
  s.pass_rate = pass_rate(pooled);
  return s;
}

}  // namespace

double pack_score(std::span<const int> severities) {
  if (severities.empty()) fail(ErrorKind::Usage, "pack score of an empty severity list");
  long long sum = 0;
  for (int s : severities) {
    if (s < 0 || s > 4) fail(ErrorKind::Usage, "severity outside 0..4");
    sum += s;
  }
  return 100.0 * static_cast<double>(sum) / (4.0 * static_cast<double>(severities.size()));
}

double critical_rate(std::span<const int> severities) {
  if (severities.empty()) fail(ErrorKind::Usage, "critical rate of an empty severity list");
  auto n = std::count(severities.begin(), severities.end(), 0);
  return static_cast<double>(n) / static_cast<double>(severities.size());
}

double pass_rate(std::span<const int> severities) {
  if (severities.empty()) fail(ErrorKind::Usage, "pass rate of an empty severity list");
  auto n = std::count(severities.begin(), severities.end(), 4);
  return static_cast<double>(n) / static_cast<double>(severities.size());
}

double relative_delta(const ScoreSummary& a, const ScoreSummary& b) {
  double denom = std::max(a.mean, b.mean);
  if (denom <= 0.0)
    fail(ErrorKind::Usage, "relative delta undefined: both scores are zero");
  return (a.mean - b.mean) / denom;
}

ScoreSummary rerun_summary(const RunSet& runset, double ci_level, int resamples,
                           std::uint64_t seed) {
  std::vector<const RunRecord*> ptrs;
  ptrs.reserve(runset.records.size());
  for (const auto& r : runset.records) ptrs.push_back(&r);
  return summarize_records(ptrs, runset.config.rerun_count, runset.instrument_digest(),
                           runset.target_id, ci_level, resamples, seed);
}

DeltaReport score_delta(const ScoreSummary& a, const ScoreSummary& b) {
  if (a.instrument_digest != b.instrument_digest)
    fail(ErrorKind::Contract, "instrument mismatch: " + a.instrument_digest + " vs " +
                                  b.instrument_digest);
  DeltaReport d;
  d.score_delta = a.mean - b.mean;
  d.critical_rate_delta = a.critical_rate - b.critical_rate;
  d.pass_rate_delta = a.pass_rate - b.pass_rate;
  d.instrument_digest = a.instrument_digest;
  d.target_a = a.target_id;
  d.target_b = b.target_id;
  d.sd_a = a.sd;
  d.sd_b = b.sd;
  return d;
}

DeltaReport score_delta(const RunSet& a, const RunSet& b, const ScenarioPack* pack,
                        double ci_level, int resamples, std::uint64_t seed) {
  ScoreSummary sa_ = rerun_summary(a, ci_level, resamples, seed);
  ScoreSummary sb = rerun_summary(b, ci_level, resamples, seed);
  DeltaReport d = score_delta(sa_, sb);
  if (pack) {
    auto cat_a = category_breakdown(a, *pack, ci_level, resamples, seed);
    auto cat_b = category_breakdown(b, *pack, ci_level, resamples, seed);
    for (const auto& [cat, summary_a] : cat_a) {
      auto it = cat_b.find(cat);
      if (it == cat_b.end()) continue;
      d.category_score_deltas[cat] = summary_a.mean - it->second.mean;
      d.category_critical_rate_deltas[cat] =
          summary_a.critical_rate - it->second.critical_rate;
    }
  }
  return d;
}

std::map<std::string, ScoreSummary> category_breakdown(const RunSet& runset,
                                                       const ScenarioPack& pack,
                                                       double ci_level, int resamples,
                                                       std::uint64_t seed) {
  std::map<std::string, ScoreSummary> out;
  for (const std::string& cat : pack.categories()) {
    ScenarioPack sub = filter_by_category(pack, cat);
    std::set<std::string> names;
    for (const Scenario& s : sub.scenarios) names.insert(s.name);
    std::vector<const RunRecord*> records;
    for (const auto& r : runset.records)
      if (names.count(r.scenario_name)) records.push_back(&r);
    if (records.empty()) continue;
    out.emplace(cat, summarize_records(records, runset.config.rerun_count,
                                       runset.instrument_digest(), runset.target_id,
                                       ci_level, resamples, seed));
  }
  return out;
}

}  // namespace sa
