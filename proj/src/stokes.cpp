#include "anisostokes/stokes.hpp"

#include <Eigen/Dense>

namespace anisostokes {

StokesSystem assemble_stokes(const FeSpace& space_v, const FeSpace& space_p, double nu, const VectorFn& f) {
  require(space_v.mesh_ptr() == space_p.mesh_ptr(), ErrorCode::InvalidArgument,
          "velocity and pressure spaces live on different meshes");
  require(nu > 0.0, ErrorCode::InvalidArgument, "viscosity must be positive");
  const Mesh& m = space_v.mesh();
  StokesSystem sys;
  sys.n_vertices = m.n_vertices();
  sys.nu = nu;
  sys.rhs = Eigen::VectorXd::Zero(sys.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m.n_cells()) * 5 * 16);
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    const int n = cell.n_vertices();
    Eigen::Matrix4d K = Eigen::Matrix4d::Zero(), Bx = Eigen::Matrix4d::Zero(), By = Eigen::Matrix4d::Zero();
    cell_quadrature(m, c, false, qp);
    for (const QPoint& q : qp)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          K(i, j) += nu * q.grad[static_cast<std::size_t>(i)].dot(q.grad[static_cast<std::size_t>(j)]) * q.JxW;
          // (d_c phi_i) psi_j
          Bx(i, j) += q.grad[static_cast<std::size_t>(i)].x() * q.phi[static_cast<std::size_t>(j)] * q.JxW;
          By(i, j) += q.grad[static_cast<std::size_t>(i)].y() * q.phi[static_cast<std::size_t>(j)] * q.JxW;
        }
    for (int i = 0; i < n; ++i) {
      const Index gi = cell.v[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        const Index gj = cell.v[static_cast<std::size_t>(j)];
        trip.emplace_back(sys.v_dof(0, gi), sys.v_dof(0, gj), K(i, j));
        trip.emplace_back(sys.v_dof(1, gi), sys.v_dof(1, gj), K(i, j));
        trip.emplace_back(sys.v_dof(0, gi), sys.p_dof(gj), -Bx(i, j));
        trip.emplace_back(sys.v_dof(1, gi), sys.p_dof(gj), -By(i, j));
        trip.emplace_back(sys.p_dof(gi), sys.v_dof(0, gj), Bx(j, i));
        trip.emplace_back(sys.p_dof(gi), sys.v_dof(1, gj), By(j, i));
      }
    }
    cell_quadrature(m, c, true, qp);
    for (const QPoint& q : qp) {
      const Vec2 fv = f(q.x);
      for (int i = 0; i < n; ++i) {
        const Index gi = cell.v[static_cast<std::size_t>(i)];
        sys.rhs[sys.v_dof(0, gi)] += fv.x() * q.phi[static_cast<std::size_t>(i)] * q.JxW;
        sys.rhs[sys.v_dof(1, gi)] += fv.y() * q.phi[static_cast<std::size_t>(i)] * q.JxW;
      }
    }
  }
  sys.matrix.resize(sys.size(), sys.size());
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();
  return sys;
}

void add_pressure_block(StokesSystem& sys, const SparseMatrix& block) {
  require(block.rows() == sys.n_vertices && block.cols() == sys.n_vertices, ErrorCode::InvalidArgument,
          "pressure block size mismatch");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(block.nonZeros()));
  for (int r = 0; r < block.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(block, r); it; ++it)
      trip.emplace_back(sys.p_dof(it.row()), sys.p_dof(it.col()), it.value());
  SparseMatrix add(sys.size(), sys.size());
  add.setFromTriplets(trip.begin(), trip.end());
  sys.matrix += add;
  sys.matrix.makeCompressed();
}

namespace {

void eliminate(StokesSystem& sys, const std::vector<char>& fixed, const Eigen::VectorXd& value) {
  SparseMatrix& A = sys.matrix;
  for (int r = 0; r < A.outerSize(); ++r)
    if (fixed[static_cast<std::size_t>(r)] != 0) A.coeffRef(r, r) += 0.0;
  A.makeCompressed();
  for (int r = 0; r < A.outerSize(); ++r) {
    const bool row_fixed = fixed[static_cast<std::size_t>(r)] != 0;
    for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
      const auto c = static_cast<std::size_t>(it.col());
      if (row_fixed) {
        it.valueRef() = it.col() == r ? 1.0 : 0.0;
      } else if (fixed[c] != 0) {
        sys.rhs[r] -= it.value() * value[it.col()];
        it.valueRef() = 0.0;
      }
    }
    if (row_fixed) sys.rhs[r] = value[r];
  }
  A.prune(0.0);
  A.makeCompressed();
}

}  // namespace

void apply_dirichlet(StokesSystem& sys, const FeSpace& space_v, const VectorFn& g) {
  require(space_v.n_dofs() == sys.n_vertices, ErrorCode::InvalidArgument, "space does not match the system");
  std::vector<char> fixed(static_cast<std::size_t>(sys.size()), 0);
  Eigen::VectorXd value = Eigen::VectorXd::Zero(sys.size());
  for (Index i = 0; i < sys.n_vertices; ++i) {
    if (!space_v.is_dirichlet(i)) continue;
    const Vec2 gv = g(space_v.dof_point(i));
    for (int c = 0; c < 2; ++c) {
      const Index d = sys.v_dof(c, i);
      fixed[static_cast<std::size_t>(d)] = 1;
      value[d] = gv[c];
      sys.constraints.emplace_back(d, gv[c]);
    }
  }
  eliminate(sys, fixed, value);
}

GaugeReport pressure_gauge(StokesSystem& sys, const FeSpace& space_v, PressureGauge mode) {
  GaugeReport rep;
  sys.gauge = mode;
  if (mode == PressureGauge::None) {
    if (space_v.pure_dirichlet()) {
      rep.singular_warning = true;
      rep.message = "pure Dirichlet velocity data without a pressure gauge: constant pressure mode is free";
    }
    return rep;
  }
  std::vector<char> fixed(static_cast<std::size_t>(sys.size()), 0);
  sys.pinned_dof = sys.p_dof(0);
  fixed[static_cast<std::size_t>(sys.pinned_dof)] = 1;
  eliminate(sys, fixed, Eigen::VectorXd::Zero(sys.size()));
  sys.constraints.emplace_back(sys.pinned_dof, 0.0);
  return rep;
}

Eigen::VectorXd basis_integrals(const FeSpace& space) {
  const Mesh& m = space.mesh();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(space.n_dofs());
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    cell_quadrature(m, c, false, qp);
    for (const QPoint& q : qp)
      for (int i = 0; i < cell.n_vertices(); ++i)
        w[cell.v[static_cast<std::size_t>(i)]] += q.phi[static_cast<std::size_t>(i)] * q.JxW;
  }
  return w;
}

double mean_value(const FeSpace& space, const Eigen::VectorXd& u) {
  const Eigen::VectorXd w = basis_integrals(space);
  return w.dot(u) / w.sum();
}

StokesSolution solve_stokes(const StokesSystem& sys, const FeSpace& space_p, double tol) {
  require(space_p.n_dofs() == sys.n_vertices, ErrorCode::InvalidArgument, "space does not match the system");
  SolveResult r = solve(sys.matrix, sys.rhs, tol);
  StokesSolution s;
  const Index n = sys.n_vertices;
  s.v1 = r.x.segment(0, n);
  s.v2 = r.x.segment(n, n);
  s.p = r.x.segment(2 * n, n);
  s.report = r.report;
  if (sys.gauge == PressureGauge::MeanZeroShift) s.p.array() -= mean_value(space_p, s.p);
  return s;
}

}  // namespace anisostokes
