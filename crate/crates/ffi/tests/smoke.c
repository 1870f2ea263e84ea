#include <math.h>
#include <stdio.h>
#include <string.h>

#include "hmrtc.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            const char *msg = hmrtc_last_error_message();              \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,     \
                    msg ? msg : "no message");                         \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    enum { I = 8, N = I * I * I };
    size_t dims[3] = {I, I, I};
    static double data[2 * N];
    static size_t observed[N];
    size_t count = 0;

    /* One undamped exponential with frequencies (0.1, 0.2, 0.3). */
    for (size_t k = 0; k < I; ++k)
        for (size_t j = 0; j < I; ++j)
            for (size_t i = 0; i < I; ++i) {
                size_t lin = i + I * (j + I * k);
                double phase = 2.0 * M_PI * (0.1 * i + 0.2 * j + 0.3 * k);
                data[2 * lin] = cos(phase);
                data[2 * lin + 1] = sin(phase);
                if ((lin * 7) % 10 < 6)
                    observed[count++] = lin;
            }

    HmrtcTensor *truth = NULL;
    CHECK(hmrtc_tensor_new(dims, 3, data, 2 * N, &truth) == HMRTC_STATUS_OK);
    CHECK(hmrtc_tensor_len(truth) == N);

    HmrtcMask *mask = NULL;
    CHECK(hmrtc_mask_new(dims, 3, observed, count, &mask) == HMRTC_STATUS_OK);
    CHECK(hmrtc_mask_len(mask) == count);

    HmrtcSolverConfig cfg = hmrtc_solver_config_default();
    cfg.r_hat = 2;
    cfg.seed = 1;
    HmrtcResult *result = NULL;
    CHECK(hmrtc_solve(truth, mask, &cfg, &result) == HMRTC_STATUS_OK);
    CHECK(hmrtc_result_iterations(result) > 0);

    HmrtcTensor *rec = NULL;
    CHECK(hmrtc_result_reconstruction(result, &rec) == HMRTC_STATUS_OK);
    double err = 1.0;
    CHECK(hmrtc_rlne(rec, truth, &err) == HMRTC_STATUS_OK);
    CHECK(err < 0.05);

    size_t small[2] = {I, I};
    HmrtcMask *wrong = NULL;
    CHECK(hmrtc_mask_new(small, 2, observed, 1, &wrong) == HMRTC_STATUS_OK);
    HmrtcResult *bad = NULL;
    CHECK(hmrtc_solve(truth, wrong, &cfg, &bad) == HMRTC_STATUS_DIM_MISMATCH);
    CHECK(bad == NULL);
    CHECK(strstr(hmrtc_last_error_message(), "[8, 8]") != NULL);

    hmrtc_mask_free(wrong);
    hmrtc_tensor_free(rec);
    hmrtc_result_free(result);
    hmrtc_mask_free(mask);
    hmrtc_tensor_free(truth);
    printf("rlne %.3e\n", err);
    return 0;
}
