/* Exercises the C interface end to end; exits non-zero on the first failure. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "projective_dpt.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,    \
                    __LINE__, #cond);                                 \
            return 1;                                                 \
        }                                                             \
    } while (0)

/* [[1 + t, x], [x, 1]]: divergence (1, 0) is constant, the field positive near 0. */
static int32_t affine(const double *p, size_t n, double *packed, void *user) {
    int *calls = user;
    ++*calls;
    if (n != 2) return 1;
    packed[0] = 1.0 + p[0];
    packed[1] = 0.1 * p[1];
    packed[2] = 1.0;
    return 0;
}

int main(void) {
    double lo[] = {-1.0}, hi[] = {1.0};
    size_t nx[] = {16};
    PdptGrid *grid = NULL;
    CHECK(pdpt_grid_new(0.0, 1.0, 8, 1, lo, hi, nx, &grid) == PDPT_STATUS_OK);
    CHECK(pdpt_grid_cells(grid) == 128 && pdpt_grid_dimension(grid) == 1);

    int calls = 0;
    PdptTensorField *field = NULL;
    CHECK(pdpt_field_sample(grid, affine, &calls, &field) == PDPT_STATUS_OK);
    CHECK(calls == 128 && pdpt_field_components(field) == 3);

    double vmin = 0.0;
    CHECK(pdpt_field_min_eigenvalue(field, &vmin) == PDPT_STATUS_OK && vmin > 0.0);

    PdptTensorField *image = NULL;
    CHECK(pdpt_field_push_forward(field, 0.5, &image) == PDPT_STATUS_OK);
    CHECK(pdpt_field_min_eigenvalue(image, &vmin) == PDPT_STATUS_OK && vmin > 0.0);

    /* worked value: alpha = 1 at (1, 2) maps I to [[2, -4], [-4, 16]] */
    double p[] = {1.0, 2.0}, s[] = {1.0, 0.0, 1.0}, q[2], sb[3];
    CHECK(pdpt_push_forward_value(1.0, p, 2, s, q, sb) == PDPT_STATUS_OK);
    CHECK(q[0] == 0.5 && q[1] == 1.0 && sb[0] == 2.0 && sb[1] == -4.0 && sb[2] == 16.0);

    PdptTensorField *bad = NULL;
    CHECK(pdpt_field_push_forward(field, -2.0, &bad) == PDPT_STATUS_DEGENERATE_MAP && bad == NULL);
    char *msg = pdpt_last_error();
    CHECK(msg != NULL && strstr(msg, "degenerate") != NULL);
    pdpt_string_free(msg);

    CHECK(pdpt_field_cells(NULL) == 0);
    CHECK(pdpt_field_min_eigenvalue(NULL, &vmin) == PDPT_STATUS_NULL_POINTER);

    pdpt_field_free(image);
    pdpt_field_free(field);
    pdpt_grid_free(grid);
    printf("ok %s\n", pdpt_version());
    return 0;
}
