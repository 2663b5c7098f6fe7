/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hefl/hefl.h"

static int failures = 0;

#define EXPECT(cond)                                                        \
    do {                                                                    \
        if (!(cond)) {                                                      \
            fprintf(stderr, "%s:%d: expected %s (last error: %s)\n",        \
                    __FILE__, __LINE__, #cond, hefl_last_error());          \
            ++failures;                                                     \
        }                                                                   \
    } while (0)

static char path_buf[4096];
static const char* join(const char* a, const char* b) {
    snprintf(path_buf, sizeof path_buf, "%s/%s", a, b);
    return path_buf;
}

int main(int argc, char** argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: hefl_capi_test <source dir> <scratch dir>\n");
        return 2;
    }
    const char* src = argv[1];
    const char* out = argv[2];
    EXPECT(strcmp(hefl_version(), "1.0.0") == 0);
    EXPECT(strcmp(hefl_status_string(HEFL_OK), "") != 0);

    hefl_scenario* sc = NULL;
    EXPECT(hefl_scenario_load("/nonexistent/config.toml", &sc) == HEFL_ERR_CONFIG);
    EXPECT(sc == NULL);
    EXPECT(strlen(hefl_last_error()) > 0);
    EXPECT(hefl_scenario_load(NULL, &sc) == HEFL_ERR_INVALID_ARGUMENT);
    EXPECT(hefl_scenario_parse("{\"seed\": 1, \"unknown\": 0}", 1, ".", &sc) == HEFL_ERR_CONFIG);

    EXPECT(hefl_scenario_load(join(src, "configs/tiny_blobs.json"), &sc) == HEFL_OK);
    if (!sc) return 1;
    size_t hospitals = 0;
    uint64_t seed = 0;
    EXPECT(hefl_scenario_hospital_count(sc, &hospitals) == HEFL_OK && hospitals == 2);
    EXPECT(hefl_scenario_set_seed(sc, 11) == HEFL_OK);
    EXPECT(hefl_scenario_seed(sc, &seed) == HEFL_OK && seed == 11);

    hefl_report* a = NULL;
    hefl_report* b = NULL;
    EXPECT(hefl_run(sc, NULL, &a) == HEFL_OK);
    EXPECT(hefl_run(sc, out, &b) == HEFL_OK);
    if (!a || !b) return 1;
    char* ja = NULL;
    char* jb = NULL;
    EXPECT(hefl_report_json(a, &ja) == HEFL_OK);
    EXPECT(hefl_report_json(b, &jb) == HEFL_OK);
    EXPECT(ja && jb && strcmp(ja, jb) == 0);
    hefl_string_free(ja);
    hefl_string_free(jb);

    double tuning = 0, test = 0, alpha[4] = {0};
    size_t count = 0;
    EXPECT(hefl_report_ensemble_accuracy(a, &tuning, &test) == HEFL_OK);
    EXPECT(tuning > 0.5 && tuning <= 1.0 && test > 0.5 && test <= 1.0);
    EXPECT(hefl_report_alpha(a, alpha, 4, &count) == HEFL_OK && count == 2);
    EXPECT(alpha[0] + alpha[1] > 0.999999 && alpha[0] + alpha[1] < 1.000001);
    EXPECT(hefl_report_alpha(a, alpha, 1, &count) == HEFL_ERR_LENGTH_MISMATCH);
    EXPECT(hefl_report_privacy_passed(a) == 1);

    char* run_dir = NULL;
    EXPECT(hefl_report_run_dir(b, &run_dir) == HEFL_OK);
    if (run_dir) {
        char chain_path[4096];
        snprintf(chain_path, sizeof chain_path, "%s/chains/B-H1.chain", run_dir);
        hefl_chain* chain = NULL;
        EXPECT(hefl_chain_load(chain_path, &chain) == HEFL_OK);
        if (chain) {
            size_t len = 0;
            int valid = 0;
            int64_t bad = -2;
            char* reason = NULL;
            EXPECT(hefl_chain_length(chain, &len) == HEFL_OK && len > 0);
            EXPECT(hefl_chain_validate(chain, &valid, &bad, &reason) == HEFL_OK);
            EXPECT(valid == 1 && bad == -1);
            hefl_string_free(reason);
            hefl_chain_free(chain);
        }

        char p1[4096], p2[4096];
        snprintf(p1, sizeof p1, "%s/probabilities/H1.csv", run_dir);
        snprintf(p2, sizeof p2, "%s/probabilities/H2.csv", run_dir);
        const char* probs[2] = {p1, p2};
        char* tuned = NULL;
        EXPECT(hefl_tune_weights(probs, 2, 0.1, &tuned) == HEFL_OK);
        EXPECT(tuned && strstr(tuned, "\"alpha\"") != NULL);
        hefl_string_free(tuned);
        EXPECT(hefl_tune_weights(probs, 2, 0.3, &tuned) == HEFL_ERR_CONFIG);

        char tables[4096];
        char* listing = NULL;
        snprintf(tables, sizeof tables, "%s/tables", out);
        EXPECT(hefl_report_tables(run_dir, tables, &listing) == HEFL_OK);
        EXPECT(listing && strstr(listing, "accuracy.csv") != NULL);
        hefl_string_free(listing);
        hefl_string_free(run_dir);
    }

    hefl_chain* missing = NULL;
    EXPECT(hefl_chain_load("/nonexistent.chain", &missing) == HEFL_ERR_IO);

    hefl_report_free(a);
    hefl_report_free(b);
    hefl_scenario_free(sc);
    if (failures) fprintf(stderr, "%d C API checks failed\n", failures);
    return failures ? 1 : 0;
}
