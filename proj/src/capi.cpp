#include "anisostokes/anisostokes.h"

#include <fstream>
#include <iostream>
#include <new>
#include <string>

#include "anisostokes/experiments.hpp"
#include "anisostokes/verify.hpp"

using namespace anisostokes;

struct as_config {
  RunConfig cfg;
};

struct as_mesh {
  std::shared_ptr<const Mesh> mesh;
  bool circle = false;
  double x0 = 0.0, y0 = 0.0, radius = 0.4;
};

struct as_solution {
  std::shared_ptr<const Mesh> mesh;
  DiscreteSolution sol;
  ErrorNorms err;
};

namespace {

thread_local std::string g_last_error;

as_status set_error(as_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
as_status guarded(F&& f) noexcept {
  try {
    f();
    g_last_error.clear();
    return AS_OK;
  } catch (const Error& e) {
    return set_error(static_cast<as_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(AS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(AS_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(AS_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* name) {
  require(p != nullptr, ErrorCode::InvalidArgument, std::string(name) + " is null");
}

}  // namespace

extern "C" {

const char* as_last_error(void) { return g_last_error.c_str(); }

const char* as_status_string(as_status s) {
  if (s == AS_OK) return "ok";
  if (s < AS_ERR_INVALID_ARGUMENT || s > AS_ERR_CONFIG) return "unknown";
  // Backed by static string literals.
  return to_string(static_cast<ErrorCode>(s)).data();
}

as_status as_config_create(as_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new as_config{};
  });
}

void as_config_destroy(as_config* cfg) { delete cfg; }

as_status as_config_set(as_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    set_option(cfg->cfg, key, value);
  });
}

as_status as_config_load(as_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "config");
    need(path, "path");
    apply_config_file(cfg->cfg, path);
  });
}

as_status as_config_validate(const as_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    validate(cfg->cfg);
  });
}

const char* as_config_keys(void) { return config_keys().c_str(); }

as_status as_run(const as_config* cfg, int* exit_code) {
  return guarded([&] {
    need(cfg, "config");
    need(exit_code, "exit_code");
    *exit_code = run(cfg->cfg, std::cout);
  });
}

as_status as_mesh_circle(double H, double x0, double y0, double radius, double snap_tol, as_mesh** out) {
  return guarded([&] {
    need(out, "out");
    require(radius > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
    auto m = std::make_unique<as_mesh>();
    m->mesh = example2_mesh(H, x0, y0, radius, snap_tol);
    m->circle = true;
    m->x0 = x0;
    m->y0 = y0;
    m->radius = radius;
    *out = m.release();
  });
}

as_status as_mesh_alternating(double H, double ratio, as_mesh** out) {
  return guarded([&] {
    need(out, "out");
    require(ratio > 0.0 && ratio < 1.0, ErrorCode::InvalidArgument, "ratio must lie in (0, 1)");
    auto m = std::make_unique<as_mesh>();
    m->mesh = example1_mesh(H, ratio);
    *out = m.release();
  });
}

void as_mesh_destroy(as_mesh* mesh) { delete mesh; }

as_status as_mesh_counts(const as_mesh* mesh, int64_t* n_vertices, int64_t* n_cells) {
  return guarded([&] {
    need(mesh, "mesh");
    if (n_vertices != nullptr) *n_vertices = mesh->mesh->n_vertices();
    if (n_cells != nullptr) *n_cells = mesh->mesh->n_cells();
  });
}

as_status as_mesh_quality(const as_mesh* mesh, as_quality* out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    const QualityReport q = mesh_quality_report(*mesh->mesh);
    *out = {q.K_max, q.K_min, q.ratio, q.e_max, q.e_min, q.kappa_max, q.angle_max};
  });
}

as_status as_mesh_write_vtk(const as_mesh* mesh, const char* path) {
  return guarded([&] {
    need(mesh, "mesh");
    need(path, "path");
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::IoError, std::string("cannot write ") + path);
    write_vtk_mesh(*mesh->mesh, os);
  });
}

as_status as_solve(const as_mesh* mesh, const as_config* cfg, as_solution** out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(cfg, "config");
    need(out, "out");
    const RunConfig& rc = cfg->cfg;
    RunConfig probe = rc;
    probe.geometry = mesh->circle ? Geometry::Circle : Geometry::Alternating;
    validate(probe);
    ProblemSetup setup;
    setup.mesh = mesh->mesh;
    setup.stab = probe.stab_config();
    if (probe.resolved_boundary() == BoundaryMode::Dirichlet) {
      setup.dirichlet_tags = {kLeft, kRight, kBottom, kTop};
      if (mesh->circle) setup.dirichlet_tags.push_back(kInterface);
      setup.gauge = PressureGauge::MeanZeroShift;
    } else {
      setup.dirichlet_tags = mesh->circle ? example2_dirichlet_tags() : example1_dirichlet_tags();
    }
    setup.exact = mesh->circle ? ExactSolution(mesh->x0, mesh->y0, mesh->radius, rc.nu)
                               : ExactSolution(0.0, 0.0, rc.radius, rc.nu);
    auto s = std::make_unique<as_solution>();
    s->mesh = mesh->mesh;
    s->sol = solve_problem(setup);
    s->err = error_norms(*s->sol.space, s->sol.v1, s->sol.v2, s->sol.p, setup.exact);
    *out = s.release();
  });
}

void as_solution_destroy(as_solution* sol) { delete sol; }

as_status as_solution_errors(const as_solution* sol, as_errors* out) {
  return guarded([&] {
    need(sol, "solution");
    need(out, "out");
    *out = {sol->err.v_h1, sol->err.v_l2, sol->err.p_l2, sol->err.p_h1};
  });
}

as_status as_solution_report(const as_solution* sol, double* residual, double* rcond_estimate) {
  return guarded([&] {
    need(sol, "solution");
    if (residual != nullptr) *residual = sol->sol.report.residual;
    if (rcond_estimate != nullptr) *rcond_estimate = sol->sol.report.rcond_estimate;
  });
}

as_status as_solution_write_vtk(const as_solution* sol, const char* path) {
  return guarded([&] {
    need(sol, "solution");
    need(path, "path");
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::IoError, std::string("cannot write ") + path);
    write_vtk_fields(*sol->mesh, sol->sol.v1, sol->sol.v2, sol->sol.p, os);
  });
}

as_status as_fit_order(const double* H, const double* e, size_t n, double* c, double* alpha) {
  return guarded([&] {
    need(H, "H");
    need(e, "e");
    const OrderFit f = fit_order(std::span<const double>(H, n), std::span<const double>(e, n));
    if (c != nullptr) *c = f.c;
    if (alpha != nullptr) *alpha = f.alpha;
  });
}

}  // extern "C"
