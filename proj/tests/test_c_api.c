/* Exercises the C interface from plain C. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sbo/sbo.h"

static int failures = 0;

#define EXPECT(cond)                                                                               \
    do {                                                                                           \
        if (!(cond)) {                                                                             \
            fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, __LINE__, #cond,   \
                    sbo_last_error());                                                             \
            ++failures;                                                                            \
        }                                                                                          \
    } while (0)

static const char* kConfig = "run: {scenario: misf-afm, workers: 1}\n"
                             "model: {U0: 1.0, U2: 0.1}\n"
                             "axes: {mu: {min: 0.0, max: 2.0, points: 9}}\n";

int main(void) {
    EXPECT(strlen(sbo_version()) > 0);
    EXPECT(strcmp(sbo_status_string(SBO_OK), "ok") == 0);

    sbo_config* cfg = NULL;
    EXPECT(sbo_config_parse(NULL, &cfg) == SBO_ERR_INVALID_ARGUMENT);
    EXPECT(sbo_config_parse("run: {scenario: nope}\n", &cfg) == SBO_ERR_CONFIG);
    EXPECT(cfg == NULL);
    EXPECT(strstr(sbo_last_error(), "misf-afm") != NULL);
    EXPECT(sbo_config_load("/nonexistent/sbo.yaml", &cfg) == SBO_ERR_IO);

    EXPECT(sbo_config_parse(kConfig, &cfg) == SBO_OK);
    EXPECT(strcmp(sbo_last_error(), "") == 0);
    EXPECT(sbo_config_set_method(cfg, "sideways") == SBO_ERR_CONFIG);
    EXPECT(sbo_config_set_method(cfg, "analytic") == SBO_OK);
    EXPECT(sbo_config_set_workers(cfg, -1) == SBO_ERR_INVALID_ARGUMENT);
    EXPECT(sbo_config_set_workers(cfg, 2) == SBO_OK);
    EXPECT(sbo_config_set_seed(cfg, 7) == SBO_OK);
    EXPECT(sbo_config_validate(cfg) == SBO_OK);

    char* json = NULL;
    EXPECT(sbo_config_to_json(cfg, &json) == SBO_OK);
    EXPECT(json && strstr(json, "\"seed\": 7") != NULL);
    sbo_config* back = NULL;
    EXPECT(sbo_config_parse(json, &back) == SBO_OK);
    sbo_config_free(back);
    sbo_string_free(json);

    sbo_result* a = NULL;
    sbo_result* b = NULL;
    EXPECT(sbo_run(cfg, &a) == SBO_OK);
    EXPECT(sbo_run(cfg, &b) == SBO_OK);
    EXPECT(sbo_result_rows(a) == 9);
    EXPECT(sbo_result_failures(a) == 0);
    EXPECT(strcmp(sbo_result_csv(a), sbo_result_csv(b)) == 0);
    EXPECT(strncmp(sbo_result_csv(a), "mu_over_U0,", 11) == 0);
    EXPECT(strstr(sbo_result_metadata(a), "\"version\"") != NULL);
    EXPECT(strlen(sbo_result_plot(a)) > 0);
    sbo_result_free(a);
    sbo_result_free(b);
    sbo_config_free(cfg);

    sbo_basis* basis = NULL;
    EXPECT(sbo_basis_create(0, &basis) == SBO_ERR_DOMAIN);
    EXPECT(sbo_basis_create(3, &basis) == SBO_OK);
    EXPECT(sbo_basis_size(basis) == 20);
    double v = 0.0;
    EXPECT(sbo_basis_element(basis, +1, 1, 1, 1, 2, 2, 2, &v) == SBO_OK);
    EXPECT(fabs(v - sqrt(2.0)) < 1e-12);
    EXPECT(sbo_basis_element(basis, 2, 1, 1, 1, 2, 2, 2, &v) == SBO_ERR_INVALID_ARGUMENT);
    EXPECT(sbo_basis_element(basis, 0, 1, 1, 1, 9, 2, 2, &v) == SBO_ERR_DOMAIN);
    char* dump = NULL;
    EXPECT(sbo_basis_dump(basis, &dump) == SBO_OK);
    EXPECT(dump && strncmp(dump, "sigma,", 6) == 0);
    sbo_string_free(dump);
    sbo_basis_free(basis);

    int n = -1;
    EXPECT(sbo_lobe_at(1.0, 0.1, 1.4, &n) == SBO_OK && n == 2);
    double t = 0.0;
    EXPECT(sbo_misf_boundary(1.0, 0.1, 1.4, 2, &t) == SBO_OK);
    EXPECT(fabs(t - 0.0642857142857143) < 1e-12);
    EXPECT(sbo_misf_boundary(1.0, 0.1, 0.8, 2, &t) == SBO_ERR_DOMAIN);
    EXPECT(sbo_qc_frozen(0.3, 0.1, 4, &t) == SBO_OK && fabs(t - 1.6) < 1e-14);
    EXPECT(sbo_qc_frozen(0.1, 0.3, 4, &t) == SBO_ERR_DOMAIN);
    EXPECT(sbo_n2_singlet_boundary(1.0, 0.05, 0.0, 4, &t) == SBO_OK);
    EXPECT(fabs(t - 0.75 * sqrt(0.05 / 4)) < 1e-14);

    sbo_config_free(NULL);
    sbo_result_free(NULL);
    sbo_basis_free(NULL);

    if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
    else printf("c api: all checks passed\n");
    return failures ? 1 : 0;
}
