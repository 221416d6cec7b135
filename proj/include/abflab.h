#ifndef ABFLAB_H
#define ABFLAB_H

/*
 * C interface of the adaptive-bias laboratory. All state lives behind the
 * opaque abf_experiment handle; strings returned by accessors stay valid
 * until the next call on the same handle. Functions never throw; failures
 * surface as status codes with a readable message in abf_last_error.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    ABF_OK = 0,
    ABF_ERR_INVALID_ARGUMENT = 1,
    ABF_ERR_CONFIG = 2,
    ABF_ERR_SOLVER = 3,
    ABF_ERR_NONCONVERGENCE = 4,
    ABF_ERR_IO = 5,
    ABF_ERR_INTERNAL = 6
} abf_status;

typedef struct abf_experiment abf_experiment;

/** Library version string, e.g. "abflab 1.0.0". */
const char* abf_version(void);

/** Fresh experiment with the documented default configuration; NULL on OOM. */
abf_experiment* abf_experiment_create(void);
void abf_experiment_destroy(abf_experiment* exp);

/** Replace the configuration from a config file / config text. */
abf_status abf_load_file(abf_experiment* exp, const char* path);
abf_status abf_load_string(abf_experiment* exp, const char* text);

/** Override one key, e.g. abf_set(exp, "experiment.seed", "7"). */
abf_status abf_set(abf_experiment* exp, const char* dotted_key, const char* value);

/** Canonical echo of the current configuration (parseable). */
const char* abf_config_echo(abf_experiment* exp);

/**
 * Validate, run the configured engine, and write artifacts plus a manifest
 * into out_dir. The process-style exit code (0/2/3/4/5) is kept on the
 * handle; the returned status mirrors it.
 */
abf_status abf_run(abf_experiment* exp, const char* out_dir);

/** Exit code of the last abf_run (0 before any run). */
int abf_exit_code(const abf_experiment* exp);

/** Message of the last failure; empty string when the last call succeeded. */
const char* abf_last_error(const abf_experiment* exp);

/** Artifact paths written by the last successful run. */
size_t abf_artifact_count(const abf_experiment* exp);
const char* abf_artifact_path(const abf_experiment* exp, size_t index);

/**
 * Run the acceptance criteria. suite is "fast" or "full"; tamper_criterion
 * is the isolation test hook (0 disables it). The machine-readable report is
 * returned through report_out (free with abf_free_string) and all_passed is
 * set to 1/0. Criterion failures are report entries, not error statuses.
 */
abf_status abf_run_acceptance(const char* suite, int threads, const char* scratch_dir,
                              int tamper_criterion, int* all_passed, char** report_out);

/** Free a string returned through an out parameter. */
void abf_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif /* ABFLAB_H */
