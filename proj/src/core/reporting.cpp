#include "core/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace sa {

using nlohmann::json;

json to_json(const BootstrapCi& ci) {
  return json{{"lo", ci.lo}, {"hi", ci.hi}, {"level", ci.level}, {"resamples", ci.resamples}};
}

json to_json(const ScoreSummary& s) {
  return json{{"run_scores", s.run_scores},
              {"mean", s.mean},
              {"sd", s.sd},
              {"ci", to_json(s.ci)},
              {"sd_basis", "over_run_scores"},
              {"critical_rate", s.critical_rate},
              {"pass_rate", s.pass_rate},
              {"scored_cells", s.scored_cells},
              {"excluded_cells", s.excluded_cells},
              {"unusable", s.unusable},
              {"instrument_digest", s.instrument_digest},
              {"target_id", s.target_id}};
}

json to_json(const DeltaReport& d) {
  return json{{"score_delta", d.score_delta},
              {"critical_rate_delta", d.critical_rate_delta},
              {"pass_rate_delta", d.pass_rate_delta},
              {"category_score_deltas", d.category_score_deltas},
              {"category_critical_rate_deltas", d.category_critical_rate_deltas},
              {"instrument_digest", d.instrument_digest},
              {"target_a", d.target_a},
              {"target_b", d.target_b},
              {"sd_a", d.sd_a},
              {"sd_b", d.sd_b}};
}

json to_json(const AurocResult& a) {
  return json{{"auroc", a.auroc},
              {"ci", to_json(a.ci)},
              {"n_safe", a.n_safe},
              {"n_unsafe", a.n_unsafe},
              {"tie_count", a.tie_count}};
}

json to_json(const EtaDecomposition& e) {
  json factors = json::array();
  for (const FactorEta& f : e.factors)
    factors.push_back(json{{"name", f.name},
                           {"ss", f.ss},
                           {"eta_sq", f.eta_sq},
                           {"ci", to_json(f.ci)},
                           {"dropped", f.dropped}});
  return json{{"factors", factors},
              {"ss_residual", e.ss_residual},
              {"rows", e.rows},
              {"discarded_resamples", e.discarded_resamples}};
}

json to_json(const StabilityCurve& c) {
  json points = json::array();
  for (const StabilityPoint& p : c.points)
    points.push_back(json{{"k", p.k},
                          {"mad", p.mad},
                          {"envelope_lo", p.envelope_lo},
                          {"envelope_hi", p.envelope_hi}});
  return json{{"points", points},
              {"reference_mean", c.reference_mean},
              {"subsets", c.subsets}};
}

json to_json(const AgreementReport& a) {
  json j{{"exact", a.exact},
         {"off_by_one", a.off_by_one},
         {"wrong_non_critical", a.wrong_non_critical},
         {"critical_miss", a.critical_miss},
         {"total", a.total},
         {"reference_critical_or_high", a.reference_critical_or_high},
         {"exact_rate", a.exact_rate()}};
  if (a.critical_miss_rate) j["critical_miss_rate"] = *a.critical_miss_rate;
  else j["critical_miss_rate"] = nullptr;
  return j;
}

json to_json(const ContrastClassification& c) {
  return json{{"fire_rate", c.fire_rate},
              {"safety_delta", c.safety_delta},
              {"safety_p", c.safety_p},
              {"size_delta", c.size_delta},
              {"size_p", c.size_p},
              {"bin", activity_bin_name(c.bin)},
              {"thresholds",
               {{"fire_rate", c.thresholds.fire_rate},
                {"delta", c.thresholds.delta},
                {"p_value", c.thresholds.p_value}}}};
}

// ---------------------------------------------------------------------------
// Token breakdown
// ---------------------------------------------------------------------------

namespace {

struct Accum {
  std::vector<double> input;
  std::vector<double> output;

  void add(const TokenUsage& u) {
    input.push_back(static_cast<double>(u.input_tokens));
    output.push_back(static_cast<double>(u.output_tokens));
  }
  double total() const {
    double t = 0;
    for (double v : input) t += v;
    for (double v : output) t += v;
    return t;
  }
};

void fill_stats(RoleTokenStats& out, const Accum& acc) {
  auto mean = [](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0;
    for (double x : xs) s += x;
    return s / xs.size();
  };
  auto sd = [&](const std::vector<double>& xs, double m) {
    if (xs.size() < 2) return 0.0;
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / (xs.size() - 1));
  };
  out.mean_input = mean(acc.input);
  out.sd_input = sd(acc.input, out.mean_input);
  out.mean_output = mean(acc.output);
  out.sd_output = sd(acc.output, out.mean_output);
}

}  // namespace

TokenBreakdownReport token_breakdown(std::span<const RunSet* const> runsets) {
  if (runsets.empty()) fail(ErrorKind::Usage, "token breakdown over zero run sets");
  Accum target, auditor, judge;
  std::size_t runs = 0;
  for (const RunSet* rs : runsets) {
    for (const RunRecord& r : rs->records) {
      target.add(r.usage_target);
      auditor.add(r.usage_auditor);
      judge.add(r.usage_judge);
      ++runs;
    }
  }
  TokenBreakdownReport rep;
  rep.runs = runs;
  fill_stats(rep.target, target);
  fill_stats(rep.auditor, auditor);
  fill_stats(rep.judge, judge);
  double grand = target.total() + auditor.total() + judge.total();
  if (grand <= 0.0) {
    rep.zero_usage_warning = true;  // shares stay 0, no division by zero
  } else {
    rep.target.share_pct = 100.0 * target.total() / grand;
    rep.auditor.share_pct = 100.0 * auditor.total() / grand;
    rep.judge.share_pct = 100.0 * judge.total() / grand;
  }
  return rep;
}

json to_json(const TokenBreakdownReport& t) {
  auto role = [](const RoleTokenStats& r) {
    return json{{"mean_input", r.mean_input},
                {"sd_input", r.sd_input},
                {"mean_output", r.mean_output},
                {"sd_output", r.sd_output},
                {"share_pct", r.share_pct}};
  };
  return json{{"target", role(t.target)},
              {"auditor", role(t.auditor)},
              {"judge", role(t.judge)},
              {"runs", t.runs},
              {"zero_usage_warning", t.zero_usage_warning}};
}

// ---------------------------------------------------------------------------
// Claim-contract report
// ---------------------------------------------------------------------------

json claim_contract_rows() {
  return json::array(
      {json{{"claim", "One target scores higher or lower than another."},
            {"fixed_assumptions",
             "Same scenario pack, rubric, auditor, judge, turn budget, sampling "
             "configuration, and rerun budget."},
            {"does_not_license",
             "Universal safety or superiority under a different instrument."}},
       json{{"claim", "The difference concentrates in particular scenario categories."},
            {"fixed_assumptions",
             "Same category definitions and aggregation rule across compared targets."},
            {"does_not_license",
             "Complete hazard coverage or discovery of all relevant deployment "
             "failures."}},
       json{{"claim", "Critical-rate differences cross a governance threshold."},
            {"fixed_assumptions",
             "Same severity scale and critical-failure definition across reruns."},
            {"does_not_license",
             "Legal compliance, policy compliance, or acceptability for deployment "
             "by itself."}},
       json{{"claim", "The comparison is sensitive to judge configuration."},
            {"fixed_assumptions",
             "Same transcripts are re-scored, or judge changes are isolated from "
             "target and auditor changes."},
            {"does_not_license",
             "A judge-independent ground truth label in domains where no such "
             "labels exist."}}});
}

json build_claim_contract_report(const ReportInputs& inputs) {
  if (inputs.summary_a.instrument_digest != inputs.instrument_digest ||
      inputs.summary_b.instrument_digest != inputs.instrument_digest ||
      inputs.delta.instrument_digest != inputs.instrument_digest) {
    fail(ErrorKind::Contract,
         "report refused: compared inputs carry different instrument digests (" +
             inputs.summary_a.instrument_digest + " vs " +
             inputs.summary_b.instrument_digest + ")");
  }

  json report;
  report["schema_version"] = 1;

  json& instrument = report["instrument"];
  instrument = inputs.instrument.is_null() ? json::object() : inputs.instrument;
  instrument["instrument_digest"] = inputs.instrument_digest;

  report["roles"] = {
      {"target_a", inputs.summary_a.target_id},
      {"target_b", inputs.summary_b.target_id},
      {"auditor", instrument.contains("auditor") ? instrument["auditor"] : json("missing")},
      {"judge", instrument.contains("judge") ? instrument["judge"] : json("missing")},
      {"capability_ordering_attestation",
       inputs.capability_attestation.empty() ? "unattested" : inputs.capability_attestation}};

  report["stability_evidence"] = {
      {"ci_a", to_json(inputs.summary_a.ci)},
      {"ci_b", to_json(inputs.summary_b.ci)},
      {"mad_curve", inputs.stability.is_null() ? json("missing") : inputs.stability},
      {"judge_sensitivity", inputs.agreement.is_null() ? json("missing") : inputs.agreement}};

  json categories = json::object();
  for (const auto& [cat, delta] : inputs.delta.category_score_deltas)
    categories[cat] = {{"score_delta", delta},
                       {"critical_rate_delta",
                        inputs.delta.category_critical_rate_deltas.count(cat)
                            ? inputs.delta.category_critical_rate_deltas.at(cat)
                            : 0.0}};
  report["risk_measures"] = {{"summary_a", to_json(inputs.summary_a)},
                             {"summary_b", to_json(inputs.summary_b)},
                             {"delta", to_json(inputs.delta)},
                             {"category_deltas", categories},
                             {"auroc", inputs.auroc},
                             {"variance", inputs.variance}};

  report["non_claims"] = json::array({"Universal safety or superiority under a different instrument.",
                                      "Complete hazard coverage or discovery of all relevant deployment failures.",
                                      "Legal compliance, policy compliance, or acceptability for deployment by itself.",
                                      "A judge-independent ground truth label in domains where no such labels exist."});
  report["claim_contract"] = claim_contract_rows();

  // Completeness gate: all five disclosure groups must be present and
  // non-empty before anything is written.
  for (const char* group : {"instrument", "roles", "stability_evidence", "risk_measures",
                            "non_claims"}) {
    if (!report.contains(group) || report[group].empty())
      fail(ErrorKind::Contract, std::string("report missing disclosure group: ") + group);
  }
  return report;
}

std::string render_report_text(const json& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  const json& risk = report.at("risk_measures");
  const json& a = risk.at("summary_a");
  const json& b = risk.at("summary_b");
  const json& delta = risk.at("delta");

  out << "=== Comparative safety score report ===\n\n";
  out << "[instrument]\n";
  out << "  digest:      " << report["instrument"].value("instrument_digest", "") << "\n";
  out << "  pack:        " << report["instrument"].value("pack_name", "") << " v"
      << report["instrument"].value("pack_version", "") << " ("
      << report["instrument"].value("pack_digest", "") << ")\n";
  if (report["instrument"].contains("rubric"))
    out << "  rubric:      " << report["instrument"]["rubric"].value("rubric_id", "") << "\n";
  out << "  turn budget: " << report["instrument"].value("turn_budget", 0) << "\n";
  out << "  reruns:      " << report["instrument"].value("rerun_count", 0) << "\n";
  if (report["instrument"].contains("sampling"))
    out << "  sampling:    " << report["instrument"]["sampling"].dump() << "\n";

  out << "\n[roles]\n";
  out << "  target A: " << report["roles"].value("target_a", "") << "\n";
  out << "  target B: " << report["roles"].value("target_b", "") << "\n";
  out << "  auditor:  " << report["roles"]["auditor"].dump() << "\n";
  out << "  judge:    " << report["roles"]["judge"].dump() << "\n";
  out << "  capability ordering: "
      << report["roles"].value("capability_ordering_attestation", "") << "\n";

  auto ci_str = [](const json& ci) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << "[" << ci.value("lo", 0.0) << ", " << ci.value("hi", 0.0) << "]";
    return s.str();
  };

  out << "\n[risk measures]\n";
  out << "  score A: " << a.value("mean", 0.0) << " +- " << a.value("sd", 0.0) << " CI "
      << ci_str(a["ci"]) << "  CR " << a.value("critical_rate", 0.0) << "  pass "
      << a.value("pass_rate", 0.0) << "\n";
  out << "  score B: " << b.value("mean", 0.0) << " +- " << b.value("sd", 0.0) << " CI "
      << ci_str(b["ci"]) << "  CR " << b.value("critical_rate", 0.0) << "  pass "
      << b.value("pass_rate", 0.0) << "\n";
  out << "  delta score (A-B): " << delta.value("score_delta", 0.0) << "\n";
  out << "  delta critical rate (A-B): " << delta.value("critical_rate_delta", 0.0) << "\n";
  for (const auto& [cat, v] : risk["category_deltas"].items())
    out << "  category " << cat << ": delta score " << v.value("score_delta", 0.0)
        << ", delta CR " << v.value("critical_rate_delta", 0.0) << "\n";

  out << "\n[stability evidence]\n";
  out << "  CI A: " << ci_str(report["stability_evidence"]["ci_a"]) << "\n";
  out << "  CI B: " << ci_str(report["stability_evidence"]["ci_b"]) << "\n";
  out << "  MAD curve: "
      << (report["stability_evidence"]["mad_curve"].is_string() ? "missing" : "included")
      << "\n";
  out << "  judge sensitivity: "
      << (report["stability_evidence"]["judge_sensitivity"].is_string() ? "missing"
                                                                        : "included")
      << "\n";

  out << "\n[claim contract]\n";
  for (const auto& row : report["claim_contract"]) {
    out << "  claim: " << row.value("claim", "") << "\n";
    out << "    fixed assumptions: " << row.value("fixed_assumptions", "") << "\n";
    out << "    does not license:  " << row.value("does_not_license", "") << "\n";
  }

  out << "\n[non-claims]\n";
  for (const auto& nc : report["non_claims"]) out << "  - " << nc.get<std::string>() << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV / SVG
// ---------------------------------------------------------------------------

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::string summary_row(const std::string& label, const json& s) {
  std::ostringstream out;
  out << csv_escape(label) << "," << csv_escape(s.value("target_id", "")) << ","
      << s.value("mean", 0.0) << "," << s.value("sd", 0.0) << ","
      << s["ci"].value("lo", 0.0) << "," << s["ci"].value("hi", 0.0) << ","
      << s.value("critical_rate", 0.0) << "," << s.value("pass_rate", 0.0) << ","
      << s.value("scored_cells", 0) << "," << s.value("excluded_cells", 0) << "\n";
  return out.str();
}

}  // namespace

std::string render_csv(const std::string& kind, const json& result) {
  std::ostringstream out;
  if (kind == "summary") {
    out << "scope,target_id,mean,sd,ci_lo,ci_hi,critical_rate,pass_rate,scored_cells,"
           "excluded_cells\n";
    if (result.contains("mean")) {
      out << summary_row("pack", result);
    } else {
      if (result.contains("pack")) out << summary_row("pack", result["pack"]);
      if (result.contains("categories"))
        for (const auto& [cat, s] : result["categories"].items())
          out << summary_row("category:" + cat, s);
    }
    return out.str();
  }
  if (kind == "delta") {
    out << "scope,target_a,target_b,score_delta,critical_rate_delta\n";
    out << "pack," << csv_escape(result.value("target_a", "")) << ","
        << csv_escape(result.value("target_b", "")) << "," << result.value("score_delta", 0.0)
        << "," << result.value("critical_rate_delta", 0.0) << "\n";
    if (result.contains("category_score_deltas"))
      for (const auto& [cat, v] : result["category_score_deltas"].items())
        out << "category:" << csv_escape(cat) << ","
            << csv_escape(result.value("target_a", "")) << ","
            << csv_escape(result.value("target_b", "")) << "," << v.get<double>() << ","
            << (result["category_critical_rate_deltas"].contains(cat)
                    ? result["category_critical_rate_deltas"][cat].get<double>()
                    : 0.0)
            << "\n";
    return out.str();
  }
  if (kind == "stability") {
    out << "k,mad,envelope_lo,envelope_hi\n";
    for (const auto& p : result.at("points"))
      out << p.value("k", 0) << "," << p.value("mad", 0.0) << ","
          << p.value("envelope_lo", 0.0) << "," << p.value("envelope_hi", 0.0) << "\n";
    return out.str();
  }
  if (kind == "variance") {
    out << "factor,ss,eta_sq,ci_lo,ci_hi,dropped\n";
    for (const auto& f : result.at("factors"))
      out << f.value("name", "") << "," << f.value("ss", 0.0) << "," << f.value("eta_sq", 0.0)
          << "," << f["ci"].value("lo", 0.0) << "," << f["ci"].value("hi", 0.0) << ","
          << (f.value("dropped", false) ? 1 : 0) << "\n";
    return out.str();
  }
  if (kind == "tokens") {
    out << "role,mean_input,sd_input,mean_output,sd_output,share_pct\n";
    for (const char* role : {"target", "auditor", "judge"}) {
      const json& r = result.at(role);
      out << role << "," << r.value("mean_input", 0.0) << "," << r.value("sd_input", 0.0)
          << "," << r.value("mean_output", 0.0) << "," << r.value("sd_output", 0.0) << ","
          << r.value("share_pct", 0.0) << "\n";
    }
    return out.str();
  }
  fail(ErrorKind::Usage, "unknown CSV kind: " + kind);
}

namespace {

struct SvgFrame {
  double width = 640, height = 400;
  double margin = 50;

  double x(double v, double vmin, double vmax) const {
    if (vmax == vmin) return margin;
    return margin + (v - vmin) / (vmax - vmin) * (width - 2 * margin);
  }
  double y(double v, double vmin, double vmax) const {
    if (vmax == vmin) return height - margin;
    return height - margin - (v - vmin) / (vmax - vmin) * (height - 2 * margin);
  }
};

std::string svg_header(const SvgFrame& f, const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
      << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << f.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  return out.str();
}

std::string bar_chart(const std::vector<std::pair<std::string, double>>& bars,
                      const std::string& title, const std::string& fill) {
  SvgFrame f;
  double vmax = 0;
  for (const auto& [_, v] : bars) vmax = std::max(vmax, v);
  if (vmax <= 0) vmax = 1;
  std::ostringstream out;
  out << svg_header(f, title);
  double slot = (f.width - 2 * f.margin) / std::max<std::size_t>(1, bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double h = bars[i].second / vmax * (f.height - 2 * f.margin);
    double x = f.margin + slot * i + slot * 0.15;
    double y = f.height - f.margin - h;
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << slot * 0.7
        << "\" height=\"" << h << "\" fill=\"" << fill << "\"/>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << f.height - f.margin + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << bars[i].first << "</text>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << y - 6
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << bars[i].second << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::string render_svg(const std::string& kind, const json& result) {
  if (kind == "stability") {
    const json& points = result.at("points");
    if (points.empty()) fail(ErrorKind::Usage, "empty stability curve");
    SvgFrame f;
    double kmin = points.front().value("k", 1), kmax = points.back().value("k", 1);
    double vmax = 0;
    for (const auto& p : points) vmax = std::max(vmax, p.value("envelope_hi", 0.0));
    if (vmax <= 0) vmax = 1;
    std::ostringstream out;
    out << svg_header(f, "Score stability (MAD vs run count k)");
    // envelope band
    out << "<polygon fill=\"#cfe3f7\" points=\"";
    for (const auto& p : points)
      out << f.x(p.value("k", 0), kmin, kmax) << "," << f.y(p.value("envelope_hi", 0.0), 0, vmax)
          << " ";
    for (auto it = points.rbegin(); it != points.rend(); ++it)
      out << f.x(it->value("k", 0), kmin, kmax) << "," << f.y(it->value("envelope_lo", 0.0), 0, vmax)
          << " ";
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const auto& p : points)
      out << f.x(p.value("k", 0), kmin, kmax) << "," << f.y(p.value("mad", 0.0), 0, vmax) << " ";
    out << "\"/>\n";
    out << "<line x1=\"" << f.margin << "\" y1=\"" << f.height - f.margin << "\" x2=\""
        << f.width - f.margin << "\" y2=\"" << f.height - f.margin
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << f.margin << "\" y1=\"" << f.margin << "\" x2=\"" << f.margin
        << "\" y2=\"" << f.height - f.margin << "\" stroke=\"black\"/>\n";
    out << "</svg>\n";
    return out.str();
  }
  if (kind == "variance") {
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& fct : result.at("factors"))
      if (!fct.value("dropped", false))
        bars.emplace_back(fct.value("name", ""), fct.value("eta_sq", 0.0));
    return bar_chart(bars, "Partial eta^2 by factor", "#1f77b4");
  }
  if (kind == "tokens") {
    std::vector<std::pair<std::string, double>> bars;
    for (const char* role : {"target", "auditor", "judge"})
      bars.emplace_back(role, result.at(role).value("share_pct", 0.0));
    return bar_chart(bars, "Token share by role (%)", "#ff7f0e");
  }
  fail(ErrorKind::Usage, "unknown SVG kind: " + kind);
}

}  // namespace sa
