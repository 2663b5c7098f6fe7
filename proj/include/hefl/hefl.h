/* C interface to the hefl simulator. All handles are opaque; every call
 * returns a hefl_status and, on failure, sets a thread-local message
 * retrievable with hefl_last_error(). Strings returned through char** must
 * be released with hefl_string_free(). */
#ifndef HEFL_H
#define HEFL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define HEFL_API __declspec(dllexport)
#else
#  define HEFL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hefl_status {
    HEFL_OK = 0,
    HEFL_ERR_INVALID_ARGUMENT = 1,
    HEFL_ERR_OVERFLOW = 2,
    HEFL_ERR_DEGENERATE_PARTIES = 3,
    HEFL_ERR_SESSION_MISMATCH = 4,
    HEFL_ERR_LENGTH_MISMATCH = 5,
    HEFL_ERR_SINGLE_USE = 6,
    HEFL_ERR_DEALER_EXHAUSTED = 7,
    HEFL_ERR_SHAPE_MISMATCH = 8,
    HEFL_ERR_PRECISION_MISMATCH = 9,
    HEFL_ERR_EMPTY_BATCH = 10,
    HEFL_ERR_EMPTY_DATASET = 11,
    HEFL_ERR_SPEC_MISMATCH = 12,
    HEFL_ERR_ZERO_SAMPLES = 13,
    HEFL_ERR_K_TOO_LARGE = 14,
    HEFL_ERR_ALIGNMENT = 15,
    HEFL_ERR_ALL_ZERO_WEIGHTS = 16,
    HEFL_ERR_UNKNOWN_MODEL_ID = 17,
    HEFL_ERR_QUORUM = 18,
    HEFL_ERR_LEDGER_REJECTION = 19,
    HEFL_ERR_SESSION_ABORT = 20,
    HEFL_ERR_EMPTY_EVAL_SET = 21,
    HEFL_ERR_CONFIG = 22,
    HEFL_ERR_IO = 23,
    HEFL_ERR_PHASE = 24,
    HEFL_ERR_INTERNAL = 25
} hefl_status;

typedef struct hefl_scenario hefl_scenario;
typedef struct hefl_report hefl_report;
typedef struct hefl_chain hefl_chain;

HEFL_API const char* hefl_version(void);
HEFL_API const char* hefl_status_string(hefl_status status);
/* Message of the last failed call on this thread ("" if none). */
HEFL_API const char* hefl_last_error(void);
/* Phase tag of the last HEFL_ERR_PHASE failure on this thread ("" if none). */
HEFL_API const char* hefl_last_error_phase(void);
HEFL_API void hefl_string_free(char* s);

/* Scenario configuration (TOML, or JSON when the path ends in .json). */
HEFL_API hefl_status hefl_scenario_load(const char* path, hefl_scenario** out);
HEFL_API hefl_status hefl_scenario_parse(const char* text, int is_json, const char* base_dir,
                                         hefl_scenario** out);
HEFL_API hefl_status hefl_scenario_set_seed(hefl_scenario* scenario, uint64_t seed);
HEFL_API hefl_status hefl_scenario_seed(const hefl_scenario* scenario, uint64_t* seed);
HEFL_API hefl_status hefl_scenario_hospital_count(const hefl_scenario* scenario, size_t* count);
HEFL_API void hefl_scenario_free(hefl_scenario* scenario);

/* Runs the full pipeline. out_dir may be NULL (no files written). */
HEFL_API hefl_status hefl_run(const hefl_scenario* scenario, const char* out_dir, hefl_report** out);
HEFL_API hefl_status hefl_report_json(const hefl_report* report, char** json);
HEFL_API hefl_status hefl_report_run_dir(const hefl_report* report, char** path);
HEFL_API hefl_status hefl_report_ensemble_accuracy(const hefl_report* report, double* tuning,
                                                   double* test);
HEFL_API hefl_status hefl_report_alpha(const hefl_report* report, double* alpha, size_t capacity,
                                       size_t* count);
HEFL_API int hefl_report_privacy_passed(const hefl_report* report);
HEFL_API void hefl_report_free(hefl_report* report);

/* Chain dumps. hefl_chain_load fails with HEFL_ERR_IO on an unreadable file;
 * structural corruption inside the block stream is reported by validate. */
HEFL_API hefl_status hefl_chain_load(const char* path, hefl_chain** out);
HEFL_API hefl_status hefl_chain_length(const hefl_chain* chain, size_t* length);
HEFL_API hefl_status hefl_chain_validate(const hefl_chain* chain, int* valid, int64_t* first_bad_height,
                                         char** reason);
HEFL_API void hefl_chain_free(hefl_chain* chain);

/* Grid-search weight tuning over probability CSV files (one per hospital).
 * Result JSON: {"alpha":[...],"accuracy":x,"correct":n,"samples":n,"candidates":n}. */
HEFL_API hefl_status hefl_tune_weights(const char* const* csv_paths, size_t count, double grid_step,
                                       char** result_json);

/* Runtime sweeps; result is CSV "sweep,value,phase,millis". */
HEFL_API hefl_status hefl_bench(const hefl_scenario* scenario, char** csv);

/* Regenerates tables (CSV and gnuplot .dat files) from a run directory into out_dir.
 * Writes the list of produced files to *listing. */
HEFL_API hefl_status hefl_report_tables(const char* run_dir, const char* out_dir, char** listing);

#ifdef __cplusplus
}
#endif

#endif /* HEFL_H */
