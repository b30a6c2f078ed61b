#include <math.h>
#include <stdio.h>
#include "branchprob.h"

#define CHECK(call)                                                   \
    do {                                                              \
        BpStatus st_ = (call);                                        \
        if (st_ != BP_STATUS_OK) {                                    \
            fprintf(stderr, "%s -> %d: %s\n", #call, st_, bp_last_error()); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    BpModel *model = NULL;
    CHECK(bp_model_hsc(0.125, 0.104, 0.147, 1.0, 1, 0, &model));

    double re, im;
    CHECK(bp_pgf(model, 1.0, 0.0, 1.0, 0.0, &re, &im));
    if (fabs(re - 1.0) > 1e-8 || fabs(im) > 1e-8) return 2;

    BpMatrix *s = NULL;
    CHECK(bp_solve_full(model, 16, &s));
    double buf[256], total = 0.0;
    CHECK(bp_matrix_copy(s, buf, 256));
    for (int i = 0; i < 256; i++) total += buf[i];
    if (bp_matrix_size(s) != 16 || fabs(total - 1.0) > 1e-6) return 3;

    BpAdmmConfig cfg;
    CHECK(bp_admm_config_reference(model, 16, 12, &cfg));
    BpMatrix *r = NULL;
    CHECK(bp_recover_admm(model, 16, 12, 0, &cfg, &r));
    if (bp_matrix_size(r) != 16) return 4;

    if (bp_model_hsc(-1.0, 0.1, 0.1, 1.0, 1, 0, &model) != BP_STATUS_INVALID_ARGUMENT) return 5;
    if (bp_last_error() == NULL) return 6;

    printf("ok %s\n", bp_version());
    bp_matrix_free(r);
    bp_matrix_free(s);
    bp_model_free(model);
    return 0;
}
