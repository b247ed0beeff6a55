/* C interface to the anisotropic Stokes toolkit. */
#ifndef ANISOSTOKES_H
#define ANISOSTOKES_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ANISOSTOKES_BUILDING)
#define AS_API __declspec(dllexport)
#else
#define AS_API __declspec(dllimport)
#endif
#else
#define AS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum as_status {
  AS_OK = 0,
  AS_ERR_INVALID_ARGUMENT = 1,
  AS_ERR_UNSUPPORTED_CUT = 2,
  AS_ERR_DEGENERATE_CELL = 3,
  AS_ERR_INVERTED_CELL = 4,
  AS_ERR_OUT_OF_DOMAIN = 5,
  AS_ERR_SINGULAR_MATRIX = 6,
  AS_ERR_INTERNAL = 7,
  AS_ERR_IO = 8,
  AS_ERR_CONFIG = 9
} as_status;

typedef struct as_config as_config;
typedef struct as_mesh as_mesh;
typedef struct as_solution as_solution;

typedef struct as_quality {
  double K_max, K_min, K_ratio, e_max, e_min, kappa_max, angle_max;
} as_quality;

typedef struct as_errors {
  double v_h1, v_l2, p_l2, p_h1;
} as_errors;

/* Message of the last failure on the calling thread; empty after success. */
AS_API const char* as_last_error(void);
AS_API const char* as_status_string(as_status s);

/* Run configuration: same keys as the config file format. */
AS_API as_status as_config_create(as_config** out);
AS_API void as_config_destroy(as_config* cfg);
AS_API as_status as_config_set(as_config* cfg, const char* key, const char* value);
AS_API as_status as_config_load(as_config* cfg, const char* path);
AS_API as_status as_config_validate(const as_config* cfg);
AS_API const char* as_config_keys(void);

/* Runs the configured experiment; progress goes to stdout. *exit_code gets 0, 2, 3 or 4. */
AS_API as_status as_run(const as_config* cfg, int* exit_code);

/* Meshes of [-1,1]^2 with patch size H. */
AS_API as_status as_mesh_circle(double H, double x0, double y0, double radius, double snap_tol, as_mesh** out);
AS_API as_status as_mesh_alternating(double H, double ratio, as_mesh** out);
AS_API void as_mesh_destroy(as_mesh* mesh);
AS_API as_status as_mesh_counts(const as_mesh* mesh, int64_t* n_vertices, int64_t* n_cells);
AS_API as_status as_mesh_quality(const as_mesh* mesh, as_quality* out);
AS_API as_status as_mesh_write_vtk(const as_mesh* mesh, const char* path);

/* Manufactured-solution solve on a mesh using the stabilisation and boundary keys of cfg. */
AS_API as_status as_solve(const as_mesh* mesh, const as_config* cfg, as_solution** out);
AS_API void as_solution_destroy(as_solution* sol);
AS_API as_status as_solution_errors(const as_solution* sol, as_errors* out);
AS_API as_status as_solution_report(const as_solution* sol, double* residual, double* rcond_estimate);
AS_API as_status as_solution_write_vtk(const as_solution* sol, const char* path);

/* Least-squares fit of e = c H^alpha. */
AS_API as_status as_fit_order(const double* H, const double* e, size_t n, double* c, double* alpha);

#ifdef __cplusplus
}
#endif

#endif
