/* Span-extraction laboratory: C interface to the shared library.
 *
 * Every fallible call returns a status code; on failure the thread-local
 * message from mapspan_last_error() describes the cause. Strings returned
 * through char** out-parameters are heap-allocated and must be released
 * with mapspan_string_free(). Handles are opaque and single-owner.
 */
#ifndef MAPSPAN_H
#define MAPSPAN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mapspan_status {
  MAPSPAN_OK = 0,
  MAPSPAN_E_INVALID_ARGUMENT = 1,
  MAPSPAN_E_DIMENSION = 2,
  MAPSPAN_E_INDEX = 3,
  MAPSPAN_E_VOCABULARY = 4,
  MAPSPAN_E_RESOURCE = 5,
  MAPSPAN_E_TRAINING = 6,
  MAPSPAN_E_NUMERIC = 7,
  MAPSPAN_E_PARSE = 8,
  MAPSPAN_E_SCHEMA = 9,
  MAPSPAN_E_CONFIG = 10,
  MAPSPAN_E_EVALUATION = 11,
  MAPSPAN_E_IO = 12,
  MAPSPAN_E_UNKNOWN = 127
} mapspan_status;

typedef struct mapspan_dataset mapspan_dataset;
typedef struct mapspan_model mapspan_model;

const char* mapspan_version(void);

/* Message for the most recent failure on this thread; "" when none. */
const char* mapspan_last_error(void);

void mapspan_string_free(char* s);

/* --- Datasets ------------------------------------------------------- */

/* Synthetic needle task. config_json keys (all optional):
 *   num, passage_lo, passage_hi, needle_lo, needle_hi, vocab, seed */
mapspan_status mapspan_dataset_generate(const char* config_json, mapspan_dataset** out);

mapspan_status mapspan_dataset_load_jsonl(const char* path, mapspan_dataset** out);

/* SQuAD-format JSON. stats_json (optional) receives
 *   {"raw_questions":..,"examples":..,"dropped":..,"aligned":..,"alignment_rate":..} */
mapspan_status mapspan_dataset_load_squad(const char* path, mapspan_dataset** out,
                                          char** stats_json);

mapspan_status mapspan_dataset_save_jsonl(const mapspan_dataset* data, const char* path);

size_t mapspan_dataset_size(const mapspan_dataset* data);

void mapspan_dataset_free(mapspan_dataset* data);

/* --- Training and models -------------------------------------------- */

/* config_json keys (all optional):
 *   encoder ("bi-recurrent"|"self-attention"), d, embed, l,
 *   head ("ind"|"vcp"|"map"), directions ("forward"|"backward"|"both"),
 *   norm_mode ("joint-flat"|"row-wise"), sample_k, full_matrix, shared_cols,
 *   batch_size, epochs, lr, beta1, beta2, eps, seed, max_sequence,
 *   dev_em_stop (stop once dev EM reaches this percent; needs dev_data),
 *   dev_strategy, dev_max_span_len
 * Unknown keys are rejected. loss_csv (optional) receives the per-step
 * loss table "step,epoch,L_s,L_e,L,wall_ms". */
mapspan_status mapspan_train(const char* config_json, const mapspan_dataset* train_data,
                             const mapspan_dataset* dev_data, mapspan_model** out_model,
                             char** loss_csv);

mapspan_status mapspan_model_save(const mapspan_model* model, const char* path);
mapspan_status mapspan_model_load(const char* path, mapspan_model** out);
mapspan_status mapspan_model_config(const mapspan_model* model, char** config_json);
void mapspan_model_free(mapspan_model* model);

/* --- Inference and evaluation ---------------------------------------- */

/* options_json keys (all optional):
 *   strategy ("ind"|"vcp"|"map-forward"|"map-ensemble"), max_span_len,
 *   ensemble_k, bin_cap
 * report_json receives {"strategy":..,"count":..,"em":..,"f1":..,
 *   "by_length":[{"length":..,"count":..,"em":..,"f1":..},..]} */
mapspan_status mapspan_evaluate(const mapspan_model* model, const mapspan_dataset* data,
                                const char* options_json, char** report_json);

/* Predicted token span for one dataset example. out_text (optional)
 * receives the predicted answer text. */
mapspan_status mapspan_predict(const mapspan_model* model, const mapspan_dataset* data,
                               size_t index, const char* options_json, size_t* out_start,
                               size_t* out_end, double* out_score, char** out_text);

/* --- Verification and benchmarks ------------------------------------- */

/* Gradient checks over every head/normalization/direction configuration.
 * options_json keys: tolerance (default 1e-4), step (1e-5), seed (1).
 * report_json receives {"tolerance":..,"step":..,"pass":..,"elapsed_ms":..,
 *   "configs":[{"name":..,"max_relative_error":..,"coordinates":..,
 *               "worst_parameter":..,"pass":..},..]} */
mapspan_status mapspan_gradcheck(const char* options_json, char** report_json);

/* Benchmark suite. options_json keys (all optional):
 *   which ("cells"|"ksweep"|"convergence"|"all"), seed,
 *   cells_ns ([64,128,256,512]), cells_k, cells_d, cells_repeats,
 *   ksweep_ks, ksweep_train_n, ksweep_dev_n, ksweep_epochs, ksweep_lr,
 *   conv_train_n, conv_probe_n, conv_full_epochs, conv_tolerance,
 *   conv_norm_mode ("row-wise" keeps both runs on one yardstick)
 * report_json receives one object with a section per sub-benchmark. */
mapspan_status mapspan_bench(const char* options_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* MAPSPAN_H */
