#ifndef EGOMO_EGOMO_H
#define EGOMO_EGOMO_H

/* C API of the egomo library. Every entry point reports failure through a
 * status code; the codes double as CLI exit codes. Strings returned through
 * out-parameters are owned by the context and stay valid until the next
 * call on that context or egomo_ctx_free. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum egomo_status {
  EGOMO_OK = 0,
  EGOMO_ERR_UNKNOWN = 1, /* an exception that is not an egomo error */
  EGOMO_ERR_CONFIG = 2,
  EGOMO_ERR_IO = 3,
  EGOMO_ERR_INTEGRITY = 4,
  EGOMO_ERR_VERSION = 5,
  EGOMO_ERR_SHAPE = 6,
  EGOMO_ERR_MISSING_CHECKPOINT = 7,
  EGOMO_ERR_PLACEMENT = 8,
  EGOMO_ERR_DEGENERATE_INPUT = 9,
  EGOMO_ERR_NEAR_STATIC = 10,
  EGOMO_ERR_NON_FINITE = 11,
  EGOMO_ERR_INVALID_ARGUMENT = 12,
  EGOMO_ERR_INTERNAL = 13
} egomo_status;

typedef struct egomo_ctx egomo_ctx;

const char* egomo_version(void);

egomo_ctx* egomo_ctx_new(void);
void egomo_ctx_free(egomo_ctx* ctx);

/* Message of the most recent failure on this context; empty if none. */
const char* egomo_last_error(const egomo_ctx* ctx);

/* Parses the JSON config at path into the context. Must succeed before any
 * of the run entry points. */
egomo_status egomo_load_config(egomo_ctx* ctx, const char* path);

/* 8 hex digits identifying the loaded config's data and model settings. */
egomo_status egomo_config_digest(egomo_ctx* ctx, const char** digest);

/* Builds the synthetic dataset at the configured path. */
egomo_status egomo_run_datagen(egomo_ctx* ctx);

/* Trains one target ("gravity", "head" or "diffusion") to its configured
 * step budget, resuming from the configured checkpoint if one exists. */
egomo_status egomo_run_train(egomo_ctx* ctx, const char* target);

/* Evaluates one mode ("slam", "slam+s", "slam+s+g", "full", "gt-head"),
 * writes the report under the configured reports path, and hands back the
 * text table. report_text may be NULL. */
egomo_status egomo_run_eval(egomo_ctx* ctx, const char* mode,
                            const char** report_text);

/* Full inference on a trajectory container. gt_path may be NULL or empty;
 * when given, samples are scored against it and summary_text carries the
 * report table, otherwise a one-line summary. summary_text may be NULL. */
egomo_status egomo_run_pipeline(egomo_ctx* ctx, const char* input_path,
                                const char* gt_path, uint64_t seed,
                                const char** summary_text);

#ifdef __cplusplus
}
#endif

#endif /* EGOMO_EGOMO_H */
