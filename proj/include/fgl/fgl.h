/* C API for the feature-graph point cloud denoising library.
 *
 * All functions return FGL_OK (0) on success. On failure they return a
 * nonzero status and leave a message retrievable via fgl_last_error()
 * (thread-local). Handles are opaque; every *_create / out-parameter
 * allocation is released with the matching *_free.
 */
#ifndef FGL_FGL_H
#define FGL_FGL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct fgl_cloud fgl_cloud;
typedef struct fgl_config fgl_config;
typedef struct fgl_report fgl_report;

enum {
    FGL_OK = 0,
    FGL_ERROR = 1,            /* pipeline / runtime failure */
    FGL_INVALID_ARGUMENT = 2, /* bad parameter or precondition violation */
    FGL_IO_ERROR = 3
};

const char* fgl_last_error(void);

/* ---- clouds ---- */
int fgl_cloud_read(const char* path, fgl_cloud** out);
/* format: "xyz", "ply", or NULL to pick from the extension. precision <= 0
 * selects the default (9 digits). */
int fgl_cloud_write(const fgl_cloud* cloud, const char* path, const char* format, int precision);
void fgl_cloud_free(fgl_cloud* cloud);
long long fgl_cloud_size(const fgl_cloud* cloud);
int fgl_cloud_has_normals(const fgl_cloud* cloud);
int fgl_cloud_bbox(const fgl_cloud* cloud, double out_min[3], double out_max[3]);

int fgl_cloud_add_noise(const fgl_cloud* cloud, double sigma, uint64_t seed, fgl_cloud** out);
int fgl_mse(const fgl_cloud* denoised, const fgl_cloud* ground_truth, double* out);
int fgl_snr(const fgl_cloud* denoised, const fgl_cloud* ground_truth, double* out);

/* ---- configuration ----
 * Integer keys:  patches, patch-size, patch-neighbors, max-iters, normals-k,
 *                seed, weight-mode (0 learned, 1 diagonal, 2 random,
 *                3 feature-exp), mutual-only, max-outer-iters, max-pg-iters,
 *                gamma-mode (0 decay, 1 constant)
 * Double keys:   trace-bound, gamma0, cg-tol, objective-tol, edge-subsample,
 *                step-size
 * String keys:   weight-mode (learned|diagonal|random|feature-exp),
 *                trace-path
 */
fgl_config* fgl_config_create(void);
void fgl_config_free(fgl_config* config);
int fgl_config_set_int(fgl_config* config, const char* key, long long value);
int fgl_config_set_double(fgl_config* config, const char* key, double value);
int fgl_config_set_string(fgl_config* config, const char* key, const char* value);

/* ---- pipeline ---- */
/* `report` may be NULL when per-iteration records are not needed. */
int fgl_denoise(const fgl_cloud* cloud, const fgl_config* config, fgl_cloud** out,
                fgl_report** report);
int fgl_report_iterations(const fgl_report* report);
/* Writes one line-delimited record per iteration. */
int fgl_report_write(const fgl_report* report, const char* path);
void fgl_report_free(fgl_report* report);

/* Single metric-learning pass over the patch graph of `cloud`. On success
 * *out_metric points to a K*K row-major matrix owned by the library; free
 * with fgl_matrix_free. */
int fgl_learn_metric(const fgl_cloud* cloud, const fgl_config* config, double** out_metric,
                     int* out_dim);
void fgl_matrix_free(double* matrix);

#ifdef __cplusplus
}
#endif

#endif /* FGL_FGL_H */
