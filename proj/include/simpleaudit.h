/* simpleaudit — comparative safety scoring of conversational targets.
 *
 * C API over the C++ core. All functions return sa_status; results are
 * returned through out-parameters. Strings returned through char** are
 * heap-allocated and must be released with sa_string_free. JSON goes in and
 * out as UTF-8 strings. On failure, sa_last_error() returns a thread-local
 * message describing the most recent error on the calling thread.
 */
#ifndef SIMPLEAUDIT_H
#define SIMPLEAUDIT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sa_status {
  SA_OK = 0,
  SA_ERR_USAGE = 1,    /* bad arguments, malformed config, bad input data */
  SA_ERR_CONTRACT = 2, /* comparability violated (instrument digest mismatch) */
  SA_ERR_PROVIDER = 3, /* model endpoint failed after retries */
  SA_ERR_IO = 4,       /* file read/write failure */
  SA_ERR_PARSE = 5     /* unparseable record or verdict */
} sa_status;

typedef struct sa_pack sa_pack;
typedef struct sa_runset sa_runset;

void sa_string_free(char* s);
const char* sa_last_error(void);

/* --- Scenario packs --- */

sa_status sa_pack_load(const char* path, sa_pack** out);
sa_status sa_pack_parse(const char* jsonl_text, const char* fallback_name, sa_pack** out);
void sa_pack_free(sa_pack* pack);

/* {"pack_name","pack_version","digest","scenario_count","categories":[...]} */
sa_status sa_pack_info(const sa_pack* pack, char** out_json);
sa_status sa_pack_digest(const sa_pack* pack, char** out_hex);
sa_status sa_pack_filter_category(const sa_pack* pack, const char* category, sa_pack** out);

/* --- Audit runs --- */

/* config_json: instrument configuration (pack digest is filled from `pack`
 * when absent). target_json: provider descriptor for the target under test.
 * out_dir: directory for incremental record persistence, or NULL. */
sa_status sa_run(const char* config_json, const char* target_json, const sa_pack* pack,
                 const char* out_dir, sa_runset** out);
sa_status sa_runset_open(const char* dir, sa_runset** out);
void sa_runset_free(sa_runset* rs);
sa_status sa_runset_digest(const sa_runset* rs, char** out_hex);
/* {"target_id","records","scored","failures","load_errors":[...]} */
sa_status sa_runset_info(const sa_runset* rs, char** out_json);

/* --- Scoring and comparison --- */

/* options_json (NULL for defaults): {"ci_level":0.95,"resamples":1000,
 * "seed":0}. With a pack, the result includes per-category summaries. */
sa_status sa_score(const sa_runset* rs, const sa_pack* pack /*nullable*/,
                   const char* options_json, char** out_json);
/* Refuses (SA_ERR_CONTRACT) unless both run sets share an instrument digest. */
sa_status sa_compare(const sa_runset* a, const sa_runset* b, const sa_pack* pack /*nullable*/,
                     const char* options_json, char** out_json);

/* --- Validity-chain evidence --- */

/* Per-rerun pack scores of the safe-tuned sets against the safety-ablated
 * sets; all sets must share one instrument digest apart from the target. */
sa_status sa_chain_auroc(const sa_runset* const* safe, size_t n_safe,
                         const sa_runset* const* ablated, size_t n_ablated,
                         const char* options_json, char** out_json);
/* Variance decomposition over run sets that may differ in target, auditor,
 * and judge but share the rest of the protocol. */
sa_status sa_chain_variance(const sa_runset* const* sets, size_t n,
                            const char* options_json, char** out_json);
/* MAD stability curve over one run set's per-rerun scores. options adds
 * {"subsets":200,"lo_percentile":2.5,"hi_percentile":97.5}. */
sa_status sa_chain_stability(const sa_runset* rs, const char* options_json, char** out_json);

/* --- Judge agreement and contrast classification --- */

sa_status sa_agreement(const int* reference, const int* candidate, size_t n,
                       char** out_json);
/* inputs_json: {"safety_safe":[...],"safety_unsafe":[...],"size_small":[...],
 * "size_large":[...],"fire":[0/1,...],"thresholds":{...}?} */
sa_status sa_classify(const char* inputs_json, char** out_json);

sa_status sa_token_breakdown(const sa_runset* const* sets, size_t n, char** out_json);

/* --- Reporting --- */

/* Builds the full claim-contract report for a vs b. options_json may carry
 * {"capability_attestation":"...","auroc":{...},"variance":{...},
 *  "stability":{...},"agreement":{...}} plus the usual scoring options. */
sa_status sa_report(const sa_runset* a, const sa_runset* b, const sa_pack* pack,
                    const char* options_json, char** out_json);
sa_status sa_report_text(const char* report_json, char** out_text);

/* kind: "summary" | "delta" | "stability" | "variance" | "tokens" */
sa_status sa_render_csv(const char* kind, const char* result_json, char** out_csv);
/* kind: "stability" | "variance" | "tokens" */
sa_status sa_render_svg(const char* kind, const char* result_json, char** out_svg);

#ifdef __cplusplus
}
#endif

#endif /* SIMPLEAUDIT_H */
