#ifndef SBO_SBO_H
#define SBO_SBO_H

/* C interface of the sbo library. Every call returns an sbo_status; on
 * failure sbo_last_error() holds a message for the calling thread. Handles
 * are opaque and released with their *_free function (NULL is accepted). */

#include <stddef.h>
#include <stdint.h>

#if defined(SBO_BUILDING_LIBRARY)
#define SBO_API __attribute__((visibility("default")))
#else
#define SBO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sbo_status {
    SBO_OK = 0,
    SBO_ERR_INVALID_ARGUMENT = 1, /* null pointer or bad enum */
    SBO_ERR_DOMAIN = 2,
    SBO_ERR_CONFIG = 3,
    SBO_ERR_CONVERGENCE = 4,
    SBO_ERR_INSTABILITY = 5,
    SBO_ERR_NO_TRANSITION = 6,
    SBO_ERR_IO = 7,
    SBO_ERR_INTERNAL = 8
} sbo_status;

SBO_API const char* sbo_version(void);
SBO_API const char* sbo_status_string(sbo_status status);
/* Message of the last failed call on this thread ("" if none). */
SBO_API const char* sbo_last_error(void);

/* Strings returned through char** are owned by the caller. */
SBO_API void sbo_string_free(char* s);

/* ---- run configuration ---- */

typedef struct sbo_config sbo_config;

SBO_API sbo_status sbo_config_load(const char* path, sbo_config** out);
SBO_API sbo_status sbo_config_parse(const char* text, sbo_config** out);
/* "analytic" or "self-consistent" */
SBO_API sbo_status sbo_config_set_method(sbo_config* config, const char* method);
/* 0: hardware concurrency */
SBO_API sbo_status sbo_config_set_workers(sbo_config* config, int workers);
SBO_API sbo_status sbo_config_set_seed(sbo_config* config, uint64_t seed);
SBO_API sbo_status sbo_config_validate(const sbo_config* config);
/* Resolved config as JSON; sbo_config_parse accepts it back. */
SBO_API sbo_status sbo_config_to_json(const sbo_config* config, char** out);
SBO_API void sbo_config_free(sbo_config* config);

/* ---- runs ---- */

typedef struct sbo_result sbo_result;

SBO_API sbo_status sbo_run(const sbo_config* config, sbo_result** out);
/* Writes table, metadata and plot script into dir (created if needed). */
SBO_API sbo_status sbo_result_write(const sbo_config* config, const sbo_result* result, const char* dir);
/* Borrowed views, valid until sbo_result_free. */
SBO_API const char* sbo_result_csv(const sbo_result* result);
SBO_API const char* sbo_result_metadata(const sbo_result* result);
SBO_API const char* sbo_result_plot(const sbo_result* result);
SBO_API size_t sbo_result_rows(const sbo_result* result);
SBO_API int sbo_result_failures(const sbo_result* result);
SBO_API void sbo_result_free(sbo_result* result);

/* ---- on-site basis ---- */

typedef struct sbo_basis sbo_basis;

SBO_API sbo_status sbo_basis_create(int n_max, sbo_basis** out);
SBO_API size_t sbo_basis_size(const sbo_basis* basis);
/* <S m n| a_sigma |S' m' n'> with sigma in {+1, 0, -1}. */
SBO_API sbo_status sbo_basis_element(const sbo_basis* basis, int sigma, int S, int m, int n, int Sp, int mp,
                                     int np, double* out);
/* Table of nonzero elements, one per line:
 * sigma S m n S' m' n' value */
SBO_API sbo_status sbo_basis_dump(const sbo_basis* basis, char** out);
SBO_API void sbo_basis_free(sbo_basis* basis);

/* ---- closed forms ---- */

/* Mott lobe index at (U0, U2, mu) with t = 0; 0 between lobes. */
SBO_API sbo_status sbo_lobe_at(double U0, double U2, double mu, int* out);
/* t_c of the MI-SF boundary on a hypercubic lattice of dimension dim. */
SBO_API sbo_status sbo_misf_boundary(double U0, double U2, double mu, int dim, double* out);
/* Nematic -> magnetic q_c with frozen occupations: 2 z (J1 - J2). */
SBO_API sbo_status sbo_qc_frozen(double J1, double J2, int z, double* out);
/* n = 2 singlet boundary t_c (|lambda| < 3 U2 / 2). */
SBO_API sbo_status sbo_n2_singlet_boundary(double U0, double U2, double lambda, int z, double* out);

#ifdef __cplusplus
}
#endif

#endif
