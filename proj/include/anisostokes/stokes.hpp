#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "anisostokes/solver.hpp"
#include "anisostokes/spaces.hpp"

namespace anisostokes {

using VectorFn = std::function<Vec2(const Vec2&)>;

enum class PressureGauge { None, MeanZeroShift };

// Block unknowns [v1 | v2 | p], one of each per mesh vertex.
struct StokesSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  Index n_vertices = 0;
  double nu = 1.0;
  std::vector<std::pair<Index, double>> constraints;
  PressureGauge gauge = PressureGauge::None;
  Index pinned_dof = -1;

  [[nodiscard]] Index v_dof(int comp, Index i) const noexcept { return comp * n_vertices + i; }
  [[nodiscard]] Index p_dof(Index i) const noexcept { return 2 * n_vertices + i; }
  [[nodiscard]] Index size() const noexcept { return 3 * n_vertices; }
};

StokesSystem assemble_stokes(const FeSpace& space_v, const FeSpace& space_p, double nu, const VectorFn& f);

// Adds a pressure-block matrix (size n_vertices) into the system.
void add_pressure_block(StokesSystem& sys, const SparseMatrix& block);

// Row replacement on the velocity Dirichlet dofs of space_v with symmetric elimination.
void apply_dirichlet(StokesSystem& sys, const FeSpace& space_v, const VectorFn& g);

struct GaugeReport {
  bool singular_warning = false;
  std::string message;
};

// MeanZeroShift pins pressure dof 0 here and shifts the mean after the solve.
GaugeReport pressure_gauge(StokesSystem& sys, const FeSpace& space_v, PressureGauge mode);

struct StokesSolution {
  Eigen::VectorXd v1, v2, p;
  SolveReport report;
};

StokesSolution solve_stokes(const StokesSystem& sys, const FeSpace& space_p, double tol = 1e-10);

// Integrals of the basis functions and area-weighted mean of a field.
Eigen::VectorXd basis_integrals(const FeSpace& space);
double mean_value(const FeSpace& space, const Eigen::VectorXd& u);

}  // namespace anisostokes
