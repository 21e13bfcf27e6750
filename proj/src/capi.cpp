#include "simpleaudit.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/audit_engine.hpp"
#include "core/errors.hpp"
#include "core/reporting.hpp"
#include "core/scenario_pack.hpp"
#include "core/scoring.hpp"
#include "core/stats.hpp"

using nlohmann::json;

struct sa_pack {
  sa::ScenarioPack pack;
};

struct sa_runset {
  sa::RunSet rs;
};

namespace {

thread_local std::string g_last_error;

sa_status status_of(sa::ErrorKind kind) {
  switch (kind) {
    case sa::ErrorKind::Usage: return SA_ERR_USAGE;
    case sa::ErrorKind::Io: return SA_ERR_IO;
    case sa::ErrorKind::Parse: return SA_ERR_PARSE;
    case sa::ErrorKind::Contract: return SA_ERR_CONTRACT;
    case sa::ErrorKind::Provider: return SA_ERR_PROVIDER;
  }
  return SA_ERR_USAGE;
}

template <typename F>
sa_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SA_OK;
  } catch (const sa::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return SA_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SA_ERR_USAGE;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) sa::fail(sa::ErrorKind::Usage, std::string("null argument: ") + what);
}

struct Options {
  double ci_level = 0.95;
  int resamples = 1000;
  std::uint64_t seed = 0;
  int subsets = 200;
  double lo_percentile = 2.5;
  double hi_percentile = 97.5;
  json raw = json::object();
};

Options parse_options(const char* options_json) {
  Options o;
  if (!options_json || !*options_json) return o;
  o.raw = json::parse(options_json);
  if (!o.raw.is_object()) sa::fail(sa::ErrorKind::Usage, "options must be a JSON object");
  o.ci_level = o.raw.value("ci_level", o.ci_level);
  o.resamples = o.raw.value("resamples", o.resamples);
  o.seed = o.raw.value("seed", o.seed);
  o.subsets = o.raw.value("subsets", o.subsets);
  o.lo_percentile = o.raw.value("lo_percentile", o.lo_percentile);
  o.hi_percentile = o.raw.value("hi_percentile", o.hi_percentile);
  return o;
}

// Per-rerun pack scores without the bootstrap machinery.
std::vector<double> run_scores_of(const sa::RunSet& rs) {
  std::vector<std::vector<int>> by_rerun(rs.config.rerun_count);
  for (const sa::RunRecord& r : rs.records)
    if (r.scored() && r.rerun_index >= 0 && r.rerun_index < rs.config.rerun_count)
      by_rerun[r.rerun_index].push_back(r.verdict->severity);
  std::vector<double> scores;
  for (const auto& sev : by_rerun)
    if (!sev.empty()) scores.push_back(sa::pack_score(sev));
  if (scores.empty())
    sa::fail(sa::ErrorKind::Usage, "run set for " + rs.target_id + " has no scored reruns");
  return scores;
}

json score_result(const sa::RunSet& rs, const sa::ScenarioPack* pack, const Options& o) {
  sa::ScoreSummary summary = sa::rerun_summary(rs, o.ci_level, o.resamples, o.seed);
  json out{{"pack", sa::to_json(summary)}, {"categories", json::object()}};
  if (pack) {
    auto cats = sa::category_breakdown(rs, *pack, o.ci_level, o.resamples, o.seed);
    for (const auto& [cat, s] : cats) out["categories"][cat] = sa::to_json(s);
  }
  return out;
}

}  // namespace

extern "C" {

void sa_string_free(char* s) { std::free(s); }

const char* sa_last_error(void) { return g_last_error.c_str(); }

sa_status sa_pack_load(const char* path, sa_pack** out) {
  return guarded([&] {
    require(path && out, "path/out");
    *out = new sa_pack{sa::load_pack(path)};
  });
}

sa_status sa_pack_parse(const char* jsonl_text, const char* fallback_name, sa_pack** out) {
  return guarded([&] {
    require(jsonl_text && out, "text/out");
    *out = new sa_pack{
        sa::parse_pack_text(jsonl_text, fallback_name ? fallback_name : "pack")};
  });
}

void sa_pack_free(sa_pack* pack) { delete pack; }

sa_status sa_pack_info(const sa_pack* pack, char** out_json) {
  return guarded([&] {
    require(pack && out_json, "pack/out");
    json j{{"pack_name", pack->pack.pack_name},
           {"pack_version", pack->pack.pack_version},
           {"digest", pack->pack.digest},
           {"scenario_count", pack->pack.size()},
           {"categories", pack->pack.categories()}};
    *out_json = dup_string(j.dump());
  });
}

sa_status sa_pack_digest(const sa_pack* pack, char** out_hex) {
  return guarded([&] {
    require(pack && out_hex, "pack/out");
    *out_hex = dup_string(pack->pack.digest);
  });
}

sa_status sa_pack_filter_category(const sa_pack* pack, const char* category, sa_pack** out) {
  return guarded([&] {
    require(pack && category && out, "pack/category/out");
    *out = new sa_pack{sa::filter_by_category(pack->pack, category)};
  });
}

sa_status sa_run(const char* config_json, const char* target_json, const sa_pack* pack,
                 const char* out_dir, sa_runset** out) {
  return guarded([&] {
    require(config_json && target_json && pack && out, "config/target/pack/out");
    json cfg = json::parse(config_json);
    if (!cfg.contains("pack_digest") || cfg["pack_digest"].get<std::string>().empty()) {
      cfg["pack_digest"] = pack->pack.digest;
      cfg["pack_name"] = pack->pack.pack_name;
      cfg["pack_version"] = pack->pack.pack_version;
    }
    sa::InstrumentConfig config = sa::InstrumentConfig::from_json(cfg);
    json target = json::parse(target_json);
    *out = new sa_runset{
        sa::run_pack(config, target, pack->pack, out_dir ? out_dir : std::string{})};
  });
}

sa_status sa_runset_open(const char* dir, sa_runset** out) {
  return guarded([&] {
    require(dir && out, "dir/out");
    *out = new sa_runset{sa::load_runset(dir)};
  });
}

void sa_runset_free(sa_runset* rs) { delete rs; }

sa_status sa_runset_digest(const sa_runset* rs, char** out_hex) {
  return guarded([&] {
    require(rs && out_hex, "runset/out");
    *out_hex = dup_string(rs->rs.instrument_digest());
  });
}

sa_status sa_runset_info(const sa_runset* rs, char** out_json) {
  return guarded([&] {
    require(rs && out_json, "runset/out");
    json j{{"target_id", rs->rs.target_id},
           {"records", rs->rs.records.size()},
           {"scored", rs->rs.scored_count()},
           {"failures", rs->rs.failure_count()},
           {"instrument_digest", rs->rs.instrument_digest()},
           {"load_errors", rs->rs.load_errors}};
    *out_json = dup_string(j.dump());
  });
}

sa_status sa_score(const sa_runset* rs, const sa_pack* pack, const char* options_json,
                   char** out_json) {
  return guarded([&] {
    require(rs && out_json, "runset/out");
    Options o = parse_options(options_json);
    *out_json = dup_string(score_result(rs->rs, pack ? &pack->pack : nullptr, o).dump());
  });
}

sa_status sa_compare(const sa_runset* a, const sa_runset* b, const sa_pack* pack,
                     const char* options_json, char** out_json) {
  return guarded([&] {
    require(a && b && out_json, "runsets/out");
    Options o = parse_options(options_json);
    sa::ScoreSummary sa_a = sa::rerun_summary(a->rs, o.ci_level, o.resamples, o.seed);
    sa::ScoreSummary sa_b = sa::rerun_summary(b->rs, o.ci_level, o.resamples, o.seed);
    sa::DeltaReport delta = sa::score_delta(a->rs, b->rs, pack ? &pack->pack : nullptr,
                                            o.ci_level, o.resamples, o.seed);
    json out{{"delta", sa::to_json(delta)},
             {"summary_a", sa::to_json(sa_a)},
             {"summary_b", sa::to_json(sa_b)}};
    if (sa_a.mean > 0.0 || sa_b.mean > 0.0)
      out["relative_delta"] = sa::relative_delta(sa_a, sa_b);
    *out_json = dup_string(out.dump());
  });
}

sa_status sa_chain_auroc(const sa_runset* const* safe, size_t n_safe,
                         const sa_runset* const* ablated, size_t n_ablated,
                         const char* options_json, char** out_json) {
  return guarded([&] {
    require(safe && ablated && out_json, "sets/out");
    if (n_safe == 0 || n_ablated == 0)
      sa::fail(sa::ErrorKind::Usage, "both groups need at least one run set");
    Options o = parse_options(options_json);
    std::string digest = safe[0]->rs.instrument_digest();
    std::vector<double> safe_scores, ablated_scores;
    auto collect = [&](const sa_runset* const* sets, size_t n, std::vector<double>& dst) {
      for (size_t i = 0; i < n; ++i) {
        if (sets[i]->rs.instrument_digest() != digest)
          sa::fail(sa::ErrorKind::Contract,
                   "instrument mismatch across compared run sets");
        for (double s : run_scores_of(sets[i]->rs)) dst.push_back(s);
      }
    };
    collect(safe, n_safe, safe_scores);
    collect(ablated, n_ablated, ablated_scores);
    sa::AurocResult r =
        sa::mann_whitney_auroc(safe_scores, ablated_scores, o.resamples, o.seed, o.ci_level);
    json out = sa::to_json(r);
    out["instrument_digest"] = digest;
    *out_json = dup_string(out.dump());
  });
}

sa_status sa_chain_variance(const sa_runset* const* sets, size_t n, const char* options_json,
                            char** out_json) {
  return guarded([&] {
    require(sets && out_json, "sets/out");
    if (n < 2) sa::fail(sa::ErrorKind::Usage, "variance decomposition needs >= 2 run sets");
    Options o = parse_options(options_json);
    std::string protocol = sets[0]->rs.config.protocol_digest();
    std::vector<sa::VarianceRow> rows;
    for (size_t i = 0; i < n; ++i) {
      const sa::RunSet& rs = sets[i]->rs;
      if (rs.config.protocol_digest() != protocol)
        sa::fail(sa::ErrorKind::Contract,
                 "protocol mismatch: run sets differ beyond target/auditor/judge");
      std::string auditor = rs.config.auditor_descriptor.dump();
      std::string judge = rs.config.judge_descriptor.dump();
      for (double s : run_scores_of(rs))
        rows.push_back(sa::VarianceRow{s, rs.target_id, auditor, judge});
    }
    sa::EtaDecomposition e = sa::type2_eta_squared(rows, o.resamples, o.seed, o.ci_level);
    json out = sa::to_json(e);
    out["protocol_digest"] = protocol;
    *out_json = dup_string(out.dump());
  });
}

sa_status sa_chain_stability(const sa_runset* rs, const char* options_json, char** out_json) {
  return guarded([&] {
    require(rs && out_json, "runset/out");
    Options o = parse_options(options_json);
    std::vector<double> scores = run_scores_of(rs->rs);
    sa::StabilityCurve c = sa::stability_mad(scores, o.subsets, o.seed, o.lo_percentile,
                                             o.hi_percentile);
    json out = sa::to_json(c);
    out["target_id"] = rs->rs.target_id;
    out["instrument_digest"] = rs->rs.instrument_digest();
    *out_json = dup_string(out.dump());
  });
}

sa_status sa_agreement(const int* reference, const int* candidate, size_t n,
                       char** out_json) {
  return guarded([&] {
    require(reference && candidate && out_json, "vectors/out");
    std::span<const int> ref(reference, n), cand(candidate, n);
    *out_json = dup_string(sa::to_json(sa::judge_agreement(ref, cand)).dump());
  });
}

sa_status sa_classify(const char* inputs_json, char** out_json) {
  return guarded([&] {
    require(inputs_json && out_json, "inputs/out");
    json in = json::parse(inputs_json);
    auto vec = [&](const char* key) {
      if (!in.contains(key))
        sa::fail(sa::ErrorKind::Usage, std::string("classify inputs missing: ") + key);
      return in[key].get<std::vector<double>>();
    };
    std::vector<double> ss = vec("safety_safe"), su = vec("safety_unsafe"),
                        zs = vec("size_small"), zl = vec("size_large");
    std::vector<double> fire_raw = vec("fire");
    sa::ContrastThresholds th;
    if (in.contains("thresholds")) {
      const json& t = in["thresholds"];
      th.fire_rate = t.value("fire_rate", th.fire_rate);
      th.delta = t.value("delta", th.delta);
      th.p_value = t.value("p_value", th.p_value);
    }
    std::unique_ptr<bool[]> fire(new bool[fire_raw.size()]);
    for (size_t i = 0; i < fire_raw.size(); ++i) fire[i] = fire_raw[i] != 0.0;
    sa::ContrastClassification c = sa::contrast_classification(
        ss, su, zs, zl, std::span<const bool>(fire.get(), fire_raw.size()), th);
    *out_json = dup_string(sa::to_json(c).dump());
  });
}

sa_status sa_token_breakdown(const sa_runset* const* sets, size_t n, char** out_json) {
  return guarded([&] {
    require(sets && out_json, "sets/out");
    std::vector<const sa::RunSet*> ptrs;
    for (size_t i = 0; i < n; ++i) ptrs.push_back(&sets[i]->rs);
    *out_json = dup_string(sa::to_json(sa::token_breakdown(ptrs)).dump());
  });
}

sa_status sa_report(const sa_runset* a, const sa_runset* b, const sa_pack* pack,
                    const char* options_json, char** out_json) {
  return guarded([&] {
    require(a && b && out_json, "runsets/out");
    Options o = parse_options(options_json);
    sa::ReportInputs in;
    in.summary_a = sa::rerun_summary(a->rs, o.ci_level, o.resamples, o.seed);
    in.summary_b = sa::rerun_summary(b->rs, o.ci_level, o.resamples, o.seed);
    in.delta = sa::score_delta(a->rs, b->rs, pack ? &pack->pack : nullptr, o.ci_level,
                               o.resamples, o.seed);
    in.instrument = a->rs.config.to_json();
    in.instrument_digest = a->rs.instrument_digest();
    if (pack) {
      in.categories_a = sa::category_breakdown(a->rs, pack->pack, o.ci_level, o.resamples,
                                               o.seed);
      in.categories_b = sa::category_breakdown(b->rs, pack->pack, o.ci_level, o.resamples,
                                               o.seed);
    }
    in.capability_attestation = o.raw.value("capability_attestation", std::string{});
    in.auroc = o.raw.value("auroc", json());
    in.variance = o.raw.value("variance", json());
    in.stability = o.raw.value("stability", json());
    in.agreement = o.raw.value("agreement", json());
    *out_json = dup_string(sa::build_claim_contract_report(in).dump());
  });
}

sa_status sa_report_text(const char* report_json, char** out_text) {
  return guarded([&] {
    require(report_json && out_text, "report/out");
    *out_text = dup_string(sa::render_report_text(json::parse(report_json)));
  });
}

sa_status sa_render_csv(const char* kind, const char* result_json, char** out_csv) {
  return guarded([&] {
    require(kind && result_json && out_csv, "kind/result/out");
    *out_csv = dup_string(sa::render_csv(kind, json::parse(result_json)));
  });
}

sa_status sa_render_svg(const char* kind, const char* result_json, char** out_svg) {
  return guarded([&] {
    require(kind && result_json && out_svg, "kind/result/out");
    *out_svg = dup_string(sa::render_svg(kind, json::parse(result_json)));
  });
}

}  // extern "C"
