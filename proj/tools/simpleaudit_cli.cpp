// Command-line front end. Links only the C API; all policy lives in the
// library. Exit codes: 0 ok, 1 usage/config/data error, 2 instrument-contract
// violation, 3 provider failure.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simpleaudit.h"

using nlohmann::json;

namespace {

int exit_code_of(sa_status s) {
  switch (s) {
    case SA_OK: return 0;
    case SA_ERR_CONTRACT: return 2;
    case SA_ERR_PROVIDER: return 3;
    default: return 1;
  }
}

[[noreturn]] void die(sa_status s) {
  std::cerr << "error: " << sa_last_error() << "\n";
  std::exit(exit_code_of(s));
}

void check(sa_status s) {
  if (s != SA_OK) die(s);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sa_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    std::exit(1);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    std::exit(1);
  }
  out << text;
}

struct PackHandle {
  sa_pack* p = nullptr;
  ~PackHandle() { sa_pack_free(p); }
};

struct RunsetHandle {
  sa_runset* r = nullptr;
  ~RunsetHandle() { sa_runset_free(r); }
};

sa_pack* open_pack(const std::string& path) {
  sa_pack* p = nullptr;
  check(sa_pack_load(path.c_str(), &p));
  return p;
}

sa_runset* open_runs(const std::string& dir) {
  sa_runset* r = nullptr;
  check(sa_runset_open(dir.c_str(), &r));
  return r;
}

struct StatOpts {
  double ci_level = 0.95;
  int resamples = 1000;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--ci-level", ci_level, "Confidence level for bootstrap intervals");
    cmd->add_option("--resamples", resamples, "Bootstrap resample count");
    cmd->add_option("--seed", seed, "Root seed for all resampling");
  }
  json to_json() const {
    return json{{"ci_level", ci_level}, {"resamples", resamples}, {"seed", seed}};
  }
};

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simpleaudit: comparative safety scoring for conversational targets"};
  app.require_subcommand(1);

  // ---- pack ----
  auto* pack_cmd = app.add_subcommand("pack", "Scenario pack operations");
  pack_cmd->require_subcommand(1);
  std::string pack_path;
  auto* pack_validate = pack_cmd->add_subcommand("validate", "Validate a pack and print its digest");
  pack_validate->add_option("pack", pack_path, "JSONL pack file")->required();

  // ---- run ----
  auto* run_cmd = app.add_subcommand("run", "Run the full audit grid for one target");
  std::string run_pack_path, run_config_path, run_target_path, run_out_dir;
  std::optional<int> run_reruns, run_turns, run_workers;
  std::optional<std::uint64_t> run_seed;
  run_cmd->add_option("--pack", run_pack_path, "JSONL pack file")->required();
  run_cmd->add_option("--config", run_config_path, "Instrument config JSON file")->required();
  run_cmd->add_option("--target", run_target_path, "Target provider descriptor JSON file")
      ->required();
  run_cmd->add_option("--out", run_out_dir, "Output directory for run records")->required();
  run_cmd->add_option("--reruns", run_reruns, "Override rerun count");
  run_cmd->add_option("--turn-budget", run_turns, "Override turn budget");
  run_cmd->add_option("--workers", run_workers, "Override worker count");
  run_cmd->add_option("--seed", run_seed, "Override root seed");

  // ---- score ----
  auto* score_cmd = app.add_subcommand("score", "Score one run set");
  std::string score_runs, score_pack, score_out, score_format = "json";
  StatOpts score_opts;
  score_cmd->add_option("--runs", score_runs, "Run-set directory")->required();
  score_cmd->add_option("--pack", score_pack, "Pack file (enables category breakdown)");
  score_cmd->add_option("--format", score_format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  score_cmd->add_option("--out", score_out, "Write output to a file instead of stdout");
  score_opts.attach(score_cmd);

  // ---- compare ----
  auto* compare_cmd = app.add_subcommand("compare", "Compare two run sets under one instrument");
  std::string cmp_a, cmp_b, cmp_pack, cmp_out, cmp_format = "json";
  StatOpts cmp_opts;
  compare_cmd->add_option("--runs-a", cmp_a, "Run-set directory for target A")->required();
  compare_cmd->add_option("--runs-b", cmp_b, "Run-set directory for target B")->required();
  compare_cmd->add_option("--pack", cmp_pack, "Pack file (enables category deltas)");
  compare_cmd->add_option("--format", cmp_format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  compare_cmd->add_option("--out", cmp_out, "Output file");
  cmp_opts.attach(compare_cmd);

  // ---- chain ----
  auto* chain_cmd = app.add_subcommand("chain", "Instrument-validity evidence");
  chain_cmd->require_subcommand(1);

  auto* auroc_cmd = chain_cmd->add_subcommand("auroc", "Safe-vs-ablated separation (AUROC)");
  std::vector<std::string> auroc_safe, auroc_ablated;
  std::string auroc_out;
  StatOpts auroc_opts;
  auroc_cmd->add_option("--safe", auroc_safe, "Run-set dirs for safety-tuned targets")
      ->required();
  auroc_cmd->add_option("--ablated", auroc_ablated, "Run-set dirs for safety-ablated targets")
      ->required();
  auroc_cmd->add_option("--out", auroc_out, "Output file");
  auroc_opts.attach(auroc_cmd);

  auto* var_cmd = chain_cmd->add_subcommand("variance", "Factor variance decomposition");
  std::vector<std::string> var_runs;
  std::string var_out, var_format = "json";
  StatOpts var_opts;
  var_cmd->add_option("--runs", var_runs, "Run-set directories (>= 2)")->required();
  var_cmd->add_option("--format", var_format, "json|csv|svg")
      ->check(CLI::IsMember({"json", "csv", "svg"}));
  var_cmd->add_option("--out", var_out, "Output file");
  var_opts.attach(var_cmd);

  auto* stab_cmd = chain_cmd->add_subcommand("stability", "MAD stability curve");
  std::string stab_runs, stab_out, stab_format = "json";
  int stab_subsets = 200;
  StatOpts stab_opts;
  stab_cmd->add_option("--runs", stab_runs, "Run-set directory")->required();
  stab_cmd->add_option("--subsets", stab_subsets, "Subsets drawn per k");
  stab_cmd->add_option("--format", stab_format, "json|csv|svg")
      ->check(CLI::IsMember({"json", "csv", "svg"}));
  stab_cmd->add_option("--out", stab_out, "Output file");
  stab_opts.attach(stab_cmd);

  // ---- agreement ----
  auto* agree_cmd = app.add_subcommand("agreement", "Judge agreement taxonomy");
  std::string agree_ref, agree_cand, agree_out;
  agree_cmd->add_option("--reference", agree_ref, "Comma-separated reference severities")
      ->required();
  agree_cmd->add_option("--candidate", agree_cand, "Comma-separated candidate severities")
      ->required();
  agree_cmd->add_option("--out", agree_out, "Output file");

  // ---- classify ----
  auto* classify_cmd = app.add_subcommand("classify", "Dimension activity classification");
  std::string classify_inputs, classify_out;
  classify_cmd->add_option("--inputs", classify_inputs, "JSON file with contrast samples")
      ->required();
  classify_cmd->add_option("--out", classify_out, "Output file");

  // ---- tokens ----
  auto* tokens_cmd = app.add_subcommand("tokens", "Token usage breakdown by role");
  std::vector<std::string> tokens_runs;
  std::string tokens_out, tokens_format = "json";
  tokens_cmd->add_option("--runs", tokens_runs, "Run-set directories")->required();
  tokens_cmd->add_option("--format", tokens_format, "json|csv|svg")
      ->check(CLI::IsMember({"json", "csv", "svg"}));
  tokens_cmd->add_option("--out", tokens_out, "Output file");

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "Full claim-contract comparison report");
  std::string rep_a, rep_b, rep_pack, rep_out, rep_format = "json";
  std::string rep_attest, rep_evidence;
  StatOpts rep_opts;
  report_cmd->add_option("--runs-a", rep_a, "Run-set directory for target A")->required();
  report_cmd->add_option("--runs-b", rep_b, "Run-set directory for target B")->required();
  report_cmd->add_option("--pack", rep_pack, "Pack file")->required();
  report_cmd->add_option("--attest", rep_attest,
                         "Capability-ordering attestation (free text)");
  report_cmd->add_option("--evidence", rep_evidence,
                         "JSON file with auroc/variance/stability/agreement evidence");
  report_cmd->add_option("--format", rep_format, "json|text")
      ->check(CLI::IsMember({"json", "text"}));
  report_cmd->add_option("--out", rep_out, "Output file");
  rep_opts.attach(report_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*pack_validate) {
    PackHandle p{open_pack(pack_path)};
    char* info = nullptr;
    check(sa_pack_info(p.p, &info));
    std::cout << take(info) << "\n";
    return 0;
  }

  if (*run_cmd) {
    PackHandle p{open_pack(run_pack_path)};
    json cfg = json::parse(read_file(run_config_path));
    if (run_reruns) cfg["rerun_count"] = *run_reruns;
    if (run_turns) cfg["turn_budget"] = *run_turns;
    if (run_workers) cfg["workers"] = *run_workers;
    if (run_seed) cfg["seed"] = *run_seed;
    std::string target = read_file(run_target_path);
    sa_runset* rs = nullptr;
    check(sa_run(cfg.dump().c_str(), target.c_str(), p.p, run_out_dir.c_str(), &rs));
    RunsetHandle r{rs};
    char* info = nullptr;
    check(sa_runset_info(r.r, &info));
    std::cout << take(info) << "\n";
    return 0;
  }

  if (*score_cmd) {
    RunsetHandle r{open_runs(score_runs)};
    PackHandle p;
    if (!score_pack.empty()) p.p = open_pack(score_pack);
    char* out = nullptr;
    check(sa_score(r.r, p.p, score_opts.to_json().dump().c_str(), &out));
    std::string result = take(out);
    if (score_format == "csv") {
      char* csv = nullptr;
      check(sa_render_csv("summary", result.c_str(), &csv));
      result = take(csv);
    }
    write_output(result, score_out);
    return 0;
  }

  if (*compare_cmd) {
    RunsetHandle a{open_runs(cmp_a)}, b{open_runs(cmp_b)};
    PackHandle p;
    if (!cmp_pack.empty()) p.p = open_pack(cmp_pack);
    char* out = nullptr;
    check(sa_compare(a.r, b.r, p.p, cmp_opts.to_json().dump().c_str(), &out));
    std::string result = take(out);
    if (cmp_format == "csv") {
      char* csv = nullptr;
      check(sa_render_csv("delta", json::parse(result)["delta"].dump().c_str(), &csv));
      result = take(csv);
    }
    write_output(result, cmp_out);
    return 0;
  }

  if (*auroc_cmd) {
    std::vector<RunsetHandle> handles(auroc_safe.size() + auroc_ablated.size());
    std::vector<const sa_runset*> safe, ablated;
    size_t idx = 0;
    for (const auto& d : auroc_safe) {
      handles[idx].r = open_runs(d);
      safe.push_back(handles[idx++].r);
    }
    for (const auto& d : auroc_ablated) {
      handles[idx].r = open_runs(d);
      ablated.push_back(handles[idx++].r);
    }
    char* out = nullptr;
    check(sa_chain_auroc(safe.data(), safe.size(), ablated.data(), ablated.size(),
                         auroc_opts.to_json().dump().c_str(), &out));
    write_output(take(out), auroc_out);
    return 0;
  }

  if (*var_cmd) {
    std::vector<RunsetHandle> handles(var_runs.size());
    std::vector<const sa_runset*> sets;
    for (size_t i = 0; i < var_runs.size(); ++i) {
      handles[i].r = open_runs(var_runs[i]);
      sets.push_back(handles[i].r);
    }
    char* out = nullptr;
    check(sa_chain_variance(sets.data(), sets.size(), var_opts.to_json().dump().c_str(),
                            &out));
    std::string result = take(out);
    if (var_format != "json") {
      char* rendered = nullptr;
      check(var_format == "csv" ? sa_render_csv("variance", result.c_str(), &rendered)
                                : sa_render_svg("variance", result.c_str(), &rendered));
      result = take(rendered);
    }
    write_output(result, var_out);
    return 0;
  }

  if (*stab_cmd) {
    RunsetHandle r{open_runs(stab_runs)};
    json opts = stab_opts.to_json();
    opts["subsets"] = stab_subsets;
    char* out = nullptr;
    check(sa_chain_stability(r.r, opts.dump().c_str(), &out));
    std::string result = take(out);
    if (stab_format != "json") {
      char* rendered = nullptr;
      check(stab_format == "csv" ? sa_render_csv("stability", result.c_str(), &rendered)
                                 : sa_render_svg("stability", result.c_str(), &rendered));
      result = take(rendered);
    }
    write_output(result, stab_out);
    return 0;
  }

  if (*agree_cmd) {
    std::vector<int> ref = parse_int_list(agree_ref);
    std::vector<int> cand = parse_int_list(agree_cand);
    if (ref.size() != cand.size()) {
      std::cerr << "error: reference and candidate lengths differ\n";
      return 1;
    }
    char* out = nullptr;
    check(sa_agreement(ref.data(), cand.data(), ref.size(), &out));
    write_output(take(out), agree_out);
    return 0;
  }

  if (*classify_cmd) {
    std::string inputs = read_file(classify_inputs);
    char* out = nullptr;
    check(sa_classify(inputs.c_str(), &out));
    write_output(take(out), classify_out);
    return 0;
  }

  if (*tokens_cmd) {
    std::vector<RunsetHandle> handles(tokens_runs.size());
    std::vector<const sa_runset*> sets;
    for (size_t i = 0; i < tokens_runs.size(); ++i) {
      handles[i].r = open_runs(tokens_runs[i]);
      sets.push_back(handles[i].r);
    }
    char* out = nullptr;
    check(sa_token_breakdown(sets.data(), sets.size(), &out));
    std::string result = take(out);
    if (tokens_format != "json") {
      char* rendered = nullptr;
      check(tokens_format == "csv" ? sa_render_csv("tokens", result.c_str(), &rendered)
                                   : sa_render_svg("tokens", result.c_str(), &rendered));
      result = take(rendered);
    }
    write_output(result, tokens_out);
    return 0;
  }

  if (*report_cmd) {
    RunsetHandle a{open_runs(rep_a)}, b{open_runs(rep_b)};
    PackHandle p{open_pack(rep_pack)};
    json opts = rep_opts.to_json();
    if (!rep_attest.empty()) opts["capability_attestation"] = rep_attest;
    if (!rep_evidence.empty()) {
      json ev = json::parse(read_file(rep_evidence));
      for (const char* key : {"auroc", "variance", "stability", "agreement"})
        if (ev.contains(key)) opts[key] = ev[key];
    }
    char* out = nullptr;
    check(sa_report(a.r, b.r, p.p, opts.dump().c_str(), &out));
    std::string result = take(out);
    if (rep_format == "text") {
      char* text = nullptr;
      check(sa_report_text(result.c_str(), &text));
      result = take(text);
    }
    write_output(result, rep_out);
    return 0;
  }

  return 1;
}
