#ifndef PTYCHO_PTYCHO_H
#define PTYCHO_PTYCHO_H

#include <stddef.h>
#include <stdint.h>

#if defined(PTYCHO_BUILDING_LIBRARY)
#define PTYCHO_API __attribute__((visibility("default")))
#else
#define PTYCHO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; on failure ptycho_last_error() holds a message
 * for the calling thread until its next failing call. */
typedef enum ptycho_status {
  PTYCHO_OK = 0,
  PTYCHO_ERR_INVALID_ARGUMENT = 1,
  PTYCHO_ERR_SHAPE_MISMATCH = 2,
  PTYCHO_ERR_COVERAGE_HOLE = 3,
  PTYCHO_ERR_NUMERICAL = 4,
  PTYCHO_ERR_IO = 5,
  PTYCHO_ERR_VERIFICATION = 6,
  PTYCHO_ERR_INTERNAL = 7
} ptycho_status;

PTYCHO_API const char* ptycho_last_error(void);
PTYCHO_API const char* ptycho_status_name(ptycho_status status);

/* Strings returned through char** out-parameters are owned by the caller. */
PTYCHO_API void ptycho_string_free(char* s);

/* Caps worker threads for per-frame loops; 0 removes the cap. The
 * PTYCHO_DRS_THREADS environment variable is honoured as well. */
PTYCHO_API void ptycho_set_thread_cap(int threads);
PTYCHO_API int ptycho_worker_threads(void);

/* Independent stream seed derived from a master seed. */
PTYCHO_API uint64_t ptycho_derive_seed(uint64_t master, uint64_t stream);

/* ------------------------------------------------------------------ fields */

/* Complex row-major 2-D field; real images are fields with zero imaginary part. */
typedef struct ptycho_field ptycho_field;

/* interleaved: rows*cols (re, im) pairs, or NULL for zeros. */
PTYCHO_API ptycho_status ptycho_field_create(size_t rows, size_t cols, const double* interleaved,
                                             ptycho_field** out);
PTYCHO_API ptycho_status ptycho_field_clone(const ptycho_field* f, ptycho_field** out);
PTYCHO_API void ptycho_field_free(ptycho_field* f);
PTYCHO_API size_t ptycho_field_rows(const ptycho_field* f);
PTYCHO_API size_t ptycho_field_cols(const ptycho_field* f);
/* Pointer to rows*cols interleaved (re, im) pairs, valid while f lives. */
PTYCHO_API double* ptycho_field_data(ptycho_field* f);
PTYCHO_API const double* ptycho_field_cdata(const ptycho_field* f);

PTYCHO_API ptycho_status ptycho_field_load_cpxf(const char* path, ptycho_field** out);
PTYCHO_API ptycho_status ptycho_field_save_cpxf(const ptycho_field* f, const char* path);
/* 8-bit PGM (P5 or P2) into the real part. */
PTYCHO_API ptycho_status ptycho_field_load_pgm(const char* path, ptycho_field** out);
PTYCHO_API ptycho_status ptycho_field_save_magnitude_pgm(const ptycho_field* f, const char* path);
PTYCHO_API ptycho_status ptycho_field_save_phase_pgm(const ptycho_field* f, const char* path);

/* ------------------------------------------------------------------ frames */

/* Q equally shaped real frames: the amplitude data b. */
typedef struct ptycho_frames ptycho_frames;

PTYCHO_API void ptycho_frames_free(ptycho_frames* b);
PTYCHO_API size_t ptycho_frames_count(const ptycho_frames* b);
PTYCHO_API size_t ptycho_frames_side(const ptycho_frames* b);
PTYCHO_API const double* ptycho_frames_data(const ptycho_frames* b);
PTYCHO_API ptycho_status ptycho_frames_load_ampf(const char* path, ptycho_frames** out);
PTYCHO_API ptycho_status ptycho_frames_save_ampf(const ptycho_frames* b, const char* path);

/* ------------------------------------------------------------------ scans */

typedef enum ptycho_scheme {
  PTYCHO_SCAN_PLAIN_RASTER = 0,
  PTYCHO_SCAN_RANK_ONE = 1,
  PTYCHO_SCAN_FULL_RANK = 2
} ptycho_scheme;

typedef struct ptycho_plan ptycho_plan;

/* grid_k x grid_l raster with step tau and integer jitter in [-jitter, jitter].
 * start_index shifts the raster indices (and positions by tau*start_index);
 * -1 starts one step before the object, as dark and bright grids need. */
PTYCHO_API ptycho_status ptycho_plan_create(ptycho_scheme scheme, int grid_k, int grid_l, int tau,
                                            int jitter, uint64_t seed, int start_index,
                                            ptycho_plan** out);
PTYCHO_API void ptycho_plan_free(ptycho_plan* p);
PTYCHO_API size_t ptycho_plan_size(const ptycho_plan* p);
/* Shift (x = column, y = row) of position i. */
PTYCHO_API ptycho_status ptycho_plan_position(const ptycho_plan* p, size_t i, int* x, int* y);
PTYCHO_API ptycho_status ptycho_plan_save(const ptycho_plan* p, const char* csv_path,
                                          const char* json_path);
/* CSV (k,l,tx,ty) and JSON sidecar as strings. */
PTYCHO_API ptycho_status ptycho_plan_csv(const ptycho_plan* p, char** out);
PTYCHO_API ptycho_status ptycho_plan_json(const ptycho_plan* p, char** out);
/* Leading '#' comment lines in the CSV are skipped. */
PTYCHO_API ptycho_status ptycho_plan_load(const char* csv_path, const char* json_path,
                                          ptycho_plan** out);
PTYCHO_API ptycho_status ptycho_scheme_from_string(const char* s, ptycho_scheme* out);

/* ------------------------------------------------------------------ geometry */

typedef enum ptycho_bc_kind { PTYCHO_BC_PERIODIC = 0, PTYCHO_BC_DARK = 1, PTYCHO_BC_BRIGHT = 2 } ptycho_bc_kind;

typedef struct ptycho_bc {
  ptycho_bc_kind kind;
  double value_re; /* bright margin value */
  double value_im;
  int enforce;
} ptycho_bc;

PTYCHO_API ptycho_status ptycho_bc_kind_from_string(const char* s, ptycho_bc_kind* out);

/* Scan plan resolved on the reconstruction grid M for an n x n object. */
typedef struct ptycho_geometry ptycho_geometry;

PTYCHO_API ptycho_status ptycho_geometry_create(const ptycho_plan* plan, int probe_m, int object_n,
                                                ptycho_bc bc, int pad_factor, ptycho_geometry** out);
PTYCHO_API void ptycho_geometry_free(ptycho_geometry* g);
PTYCHO_API size_t ptycho_geometry_frames(const ptycho_geometry* g);
PTYCHO_API int ptycho_geometry_frame_side(const ptycho_geometry* g);
PTYCHO_API int ptycho_geometry_grid_rows(const ptycho_geometry* g);
PTYCHO_API int ptycho_geometry_grid_cols(const ptycho_geometry* g);
/* Global row/column of local pixel (0, 0) of M; <= 0. */
PTYCHO_API void ptycho_geometry_grid_origin(const ptycho_geometry* g, int* row, int* col);
PTYCHO_API size_t ptycho_geometry_margin_pixels(const ptycho_geometry* g);

/* n x n interior -> field on M with the boundary condition's margin. */
PTYCHO_API ptycho_status ptycho_extend_truth(const ptycho_geometry* g, const ptycho_field* object,
                                             ptycho_field** out);
PTYCHO_API ptycho_status ptycho_interior(const ptycho_geometry* g, const ptycho_field* object_on_m,
                                         ptycho_field** out);
PTYCHO_API ptycho_status ptycho_measure(const ptycho_geometry* g, const ptycho_field* probe,
                                        const ptycho_field* object_on_m, ptycho_frames** out);

/* ------------------------------------------------------------------ objects and probes */

/* image_a + i image_b from the real parts of two equally shaped images. */
PTYCHO_API ptycho_status ptycho_make_cib(const ptycho_field* image_a, const ptycho_field* image_b,
                                         ptycho_field** out);
/* Deterministic 8-bit stand-in images, which = 0 or 1. */
PTYCHO_API ptycho_status ptycho_synthetic_cib_image(int n, int which, ptycho_field** out);
PTYCHO_API ptycho_status ptycho_make_rpp(int n, uint64_t seed, ptycho_field** out);

PTYCHO_API ptycho_status ptycho_iid_probe(int m, uint64_t seed, ptycho_field** out);
PTYCHO_API ptycho_status ptycho_correlated_probe(int m, double c, uint64_t seed, ptycho_field** out);
/* PPC(k, delta) estimate of the true probe; guaranteed set when the
 * predicate holds at every pixel by construction. */
PTYCHO_API ptycho_status ptycho_ppc_init(const ptycho_field* truth, double kx, double ky, double delta,
                                         int object_n, uint64_t seed, ptycho_field** out,
                                         int* guaranteed);
PTYCHO_API ptycho_status ptycho_ppc_fraction(const ptycho_field* estimate, const ptycho_field* truth,
                                             double delta, double* fraction);

/* ------------------------------------------------------------------ noise and metrics */

PTYCHO_API ptycho_status ptycho_poissonize(const ptycho_frames* clean, double photon_scale,
                                           uint64_t seed, ptycho_frames** out);
PTYCHO_API ptycho_status ptycho_nsr(const ptycho_frames* noisy, const ptycho_frames* clean, double* out);
PTYCHO_API ptycho_status ptycho_calibrate_photon_scale(const ptycho_frames* clean, double target_nsr,
                                                       uint64_t seed, double* photon_scale);

typedef struct ptycho_metrics {
  double re;
  double re2;
  double alpha_re;
  double alpha_im;
  double kx;
  double ky;
} ptycho_metrics;

PTYCHO_API ptycho_status ptycho_relative_error(const ptycho_field* truth, const ptycho_field* estimate,
                                               int discount_ramp, ptycho_metrics* out);
/* ||b - |F(probe, object)||| / ||b|| */
PTYCHO_API ptycho_status ptycho_relative_residual(const ptycho_geometry* g, const ptycho_frames* b,
                                                  const ptycho_field* probe,
                                                  const ptycho_field* object_on_m, double* out);

/* ------------------------------------------------------------------ reconstruction */

typedef enum ptycho_objective { PTYCHO_GAUSSIAN = 0, PTYCHO_POISSON = 1 } ptycho_objective;
typedef enum ptycho_object_init {
  PTYCHO_INIT_RANDOM_PHASE = 0,
  PTYCHO_INIT_ZERO = 1,
  PTYCHO_INIT_CUSTOM = 2
} ptycho_object_init;
typedef enum ptycho_start { PTYCHO_START_WARM = 0, PTYCHO_START_COLD = 1 } ptycho_start;

typedef struct ptycho_amdrs_config {
  ptycho_objective objective;
  double rho;
  int max_inner;
  double inner_tol;
  int max_epochs;
  double outer_tol;
  int stagnation_window;
  double rr_tol;
  ptycho_object_init object_init;
  ptycho_start start;
  uint64_t seed;
  double eps_rel;
  int record_timing;
} ptycho_amdrs_config;

PTYCHO_API void ptycho_amdrs_config_default(ptycho_amdrs_config* cfg);
PTYCHO_API ptycho_status ptycho_objective_from_string(const char* s, ptycho_objective* out);
PTYCHO_API ptycho_status ptycho_object_init_from_string(const char* s, ptycho_object_init* out);
PTYCHO_API ptycho_status ptycho_start_from_string(const char* s, ptycho_start* out);

typedef struct ptycho_history ptycho_history;

typedef struct ptycho_epoch {
  int epoch;
  double re;
  double re2;
  double rr;
  int inner_obj;
  int inner_probe;
  double seconds;
} ptycho_epoch;

/* object_init (on M) may be NULL unless cfg->object_init is custom; truth (the
 * n x n interior) may be NULL, in which case RE and RE2 are NaN. */
PTYCHO_API ptycho_status ptycho_reconstruct(const ptycho_geometry* g, const ptycho_frames* b,
                                            const ptycho_field* probe_init,
                                            const ptycho_field* object_init, const ptycho_field* truth,
                                            const ptycho_amdrs_config* cfg, ptycho_history** out);
PTYCHO_API void ptycho_history_free(ptycho_history* h);
PTYCHO_API size_t ptycho_history_epochs(const ptycho_history* h);
PTYCHO_API ptycho_status ptycho_history_epoch(const ptycho_history* h, size_t i, ptycho_epoch* out);
PTYCHO_API const char* ptycho_history_stop_reason(const ptycho_history* h);
/* Copies of the final estimates: object on M, probe m x m. */
PTYCHO_API ptycho_status ptycho_history_object(const ptycho_history* h, ptycho_field** out);
PTYCHO_API ptycho_status ptycho_history_probe(const ptycho_history* h, ptycho_field** out);
/* epoch,re,re2,rr,inner_obj,inner_probe,seconds */
PTYCHO_API ptycho_status ptycho_history_csv(const ptycho_history* h, char** out);

typedef enum ptycho_metric { PTYCHO_METRIC_RE = 0, PTYCHO_METRIC_RE2 = 1, PTYCHO_METRIC_RR = 2 } ptycho_metric;

/* exp(least-squares slope of log(metric) against epoch) over [first, last]. */
PTYCHO_API ptycho_status ptycho_fit_rate(const ptycho_history* h, ptycho_metric metric, int first_epoch,
                                         int last_epoch, double* out);

/* ------------------------------------------------------------------ stability lab */

typedef struct ptycho_stability_config {
  int n;
  int m;
  int tau;
  int pad;
  uint64_t seed;
  const double* rhos;
  size_t rho_count;
  const double* lambdas;
  size_t lambda_count;
  double noise_level;
} ptycho_stability_config;

/* Defaults; the rho and lambda arrays point at static storage. */
PTYCHO_API void ptycho_stability_config_default(ptycho_stability_config* cfg);

/* Runs the tiny-instance suite; json receives the report, all_pass whether
 * every hard check passed. Size guard violations return INVALID_ARGUMENT. */
PTYCHO_API ptycho_status ptycho_stability_run(const ptycho_stability_config* cfg, char** json,
                                              int* all_pass);

#ifdef __cplusplus
}
#endif

#endif
