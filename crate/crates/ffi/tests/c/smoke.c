#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "structsparse.h"

#define N 24
#define P 32

static int fail(const char *what, enum SsStatus s) {
    const char *msg = ss_last_error();
    fprintf(stderr, "%s failed with %d: %s\n", what, (int)s, msg ? msg : "(none)");
    return 1;
}

int main(void) {
    double x[N * P], beta[P] = {0}, y[N] = {0}, est[P];
    unsigned state = 12345u;
    for (int i = 0; i < N * P; i++) {
        state = state * 1103515245u + 12345u;
        x[i] = ((double)(state >> 8) / (double)(1u << 24)) - 0.5;
    }
    for (int j = 10; j < 14; j++) beta[j] = 1.0 + 0.25 * j;
    for (int i = 0; i < N; i++)
        for (int j = 0; j < P; j++) y[i] += x[i * P + j] * beta[j];

    SsDesign *design = NULL;
    SsBlockSet *blocks = NULL;
    SsScheme *scheme = NULL;
    SsPath *path = NULL;
    enum SsStatus s;
    if ((s = ss_design_new(x, N, P, &design)) != SS_STATUS_OK) return fail("design", s);
    if ((s = ss_blocks_from_json("{\"kind\": \"line\", \"p\": 32}", &blocks)) != SS_STATUS_OK) return fail("blocks", s);
    if ((s = ss_scheme_from_json("{\"kind\": \"graph\", \"graph\": {\"kind\": \"line\", \"p\": 32}}", &scheme)) != SS_STATUS_OK)
        return fail("scheme", s);
    if ((s = ss_structomp(design, y, N, blocks, scheme, INFINITY, &path)) != SS_STATUS_OK) return fail("structomp", s);

    double rn, c, err;
    s = ss_path_point(path, ss_path_selected(path), est, P, &rn, &c);
    if (s != SS_STATUS_OK) return fail("point", s);
    if ((s = ss_recovery_error(est, beta, P, &err)) != SS_STATUS_OK) return fail("error", s);

    if (ss_design_new(x, N, P, NULL) != SS_STATUS_NULL_POINTER || ss_last_error() == NULL) {
        fprintf(stderr, "null output not reported\n");
        return 1;
    }
    printf("version %s steps %zu error %.3e residual %.3e complexity %.3f\n", ss_version(), ss_path_len(path), err, rn, c);

    ss_path_free(path);
    ss_scheme_free(scheme);
    ss_blocks_free(blocks);
    ss_design_free(design);
    return err < 1e-8 ? 0 : 1;
}
