#include "anisostokes/verify.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace anisostokes {

Vec2 ExactSolution::velocity(const Vec2& x) const noexcept {
  const double X = x.x() - x0_, Y = x.y() - y0_, A = x.x() - 1.0;
  const double K = X * X + Y * Y - r_ * r_;
  const double A2 = A * A, A3 = A2 * A;
  return {4.0 * K * A3 * Y, -4.0 * K * A3 * X - 3.0 * K * K * A2};
}

Eigen::Matrix2d ExactSolution::velocity_gradient(const Vec2& x) const noexcept {
  const double X = x.x() - x0_, Y = x.y() - y0_, A = x.x() - 1.0;
  const double K = X * X + Y * Y - r_ * r_;
  const double A2 = A * A, A3 = A2 * A;
  Eigen::Matrix2d g;
  g(0, 0) = 4.0 * A2 * Y * (2.0 * A * X + 3.0 * K);
  g(0, 1) = 4.0 * A3 * (K + 2.0 * Y * Y);
  g(1, 0) = -2.0 * A * (2.0 * A2 * K + 4.0 * A2 * X * X + 12.0 * A * K * X + 3.0 * K * K);
  g(1, 1) = -g(0, 0);
  return g;
}

double ExactSolution::pressure(const Vec2& x) const noexcept {
  const double X = x.x() - x0_, Y = x.y() - y0_, A = x.x() - 1.0;
  const double K = X * X + Y * Y - r_ * r_;
  return 8.0 * X * A * A * A * Y + 12.0 * K * A * A * Y;
}

Vec2 ExactSolution::pressure_gradient(const Vec2& x) const noexcept {
  const double X = x.x() - x0_, Y = x.y() - y0_, A = x.x() - 1.0;
  const double K = X * X + Y * Y - r_ * r_;
  return {8.0 * A * Y * (A * A + 6.0 * A * X + 3.0 * K), 4.0 * A * A * (2.0 * A * X + 3.0 * K + 6.0 * Y * Y)};
}

Vec2 ExactSolution::forcing(const Vec2& x) const noexcept {
  const double X = x.x() - x0_, Y = x.y() - y0_, A = x.x() - 1.0;
  const double K = X * X + Y * Y - r_ * r_;
  const double A2 = A * A, A3 = A2 * A, nu = nu_;
  const double f1 = 8.0 * A * Y * (-4.0 * A2 * nu + A2 - 6.0 * A * X * nu + 6.0 * A * X - 3.0 * K * nu + 3.0 * K);
  const double f2 = 2.0 * (16.0 * A3 * X * nu + 4.0 * A3 * X + 24.0 * A2 * K * nu + 6.0 * A2 * K +
                           36.0 * A2 * X * X * nu + 12.0 * A2 * Y * Y * nu + 12.0 * A2 * Y * Y +
                           36.0 * A * K * X * nu + 3.0 * K * K * nu);
  return {f1, f2};
}

ExactSolution manufactured_solution(double x0, double y0, double r, double nu) {
  require(r > 0.0 && nu > 0.0, ErrorCode::InvalidArgument, "radius and viscosity must be positive");
  return {x0, y0, r, nu};
}

namespace {

void check_sizes(const FeSpace& space, std::initializer_list<const Eigen::VectorXd*> fields) {
  for (const auto* f : fields)
    require(f->size() == space.n_dofs(), ErrorCode::InvalidArgument, "coefficient vector size mismatch");
}

struct FeAt {
  double u = 0.0;
  Vec2 g = Vec2::Zero();
};

FeAt fe_at(const Cell& cell, const QPoint& q, const Eigen::VectorXd& u) {
  FeAt r;
  for (int k = 0; k < cell.n_vertices(); ++k) {
    const double c = u[cell.v[static_cast<std::size_t>(k)]];
    r.u += c * q.phi[static_cast<std::size_t>(k)];
    r.g += c * q.grad[static_cast<std::size_t>(k)];
  }
  return r;
}

}  // namespace

ErrorNorms error_norms(const FeSpace& space, const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                       const Eigen::VectorXd& p, const ExactSolution& exact) {
  check_sizes(space, {&v1, &v2, &p});
  const Mesh& m = space.mesh();
  ErrorNorms e;
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    cell_quadrature(m, c, true, qp);
    for (const QPoint& q : qp) {
      const FeAt a = fe_at(cell, q, v1), b = fe_at(cell, q, v2), pp = fe_at(cell, q, p);
      const Vec2 v = exact.velocity(q.x);
      const Eigen::Matrix2d G = exact.velocity_gradient(q.x);
      e.v_l2 += ((v.x() - a.u) * (v.x() - a.u) + (v.y() - b.u) * (v.y() - b.u)) * q.JxW;
      e.v_h1 += ((G.row(0).transpose() - a.g).squaredNorm() + (G.row(1).transpose() - b.g).squaredNorm()) * q.JxW;
      const double dp = exact.pressure(q.x) - pp.u;
      e.p_l2 += dp * dp * q.JxW;
      e.p_h1 += (exact.pressure_gradient(q.x) - pp.g).squaredNorm() * q.JxW;
    }
  }
  e.v_h1 = std::sqrt(e.v_h1);
  e.v_l2 = std::sqrt(e.v_l2);
  e.p_l2 = std::sqrt(e.p_l2);
  e.p_h1 = std::sqrt(e.p_h1);
  return e;
}

double l2_norm(const FeSpace& space, const Eigen::VectorXd& u) {
  check_sizes(space, {&u});
  const Mesh& m = space.mesh();
  double s = 0.0;
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    cell_quadrature(m, c, true, qp);
    for (const QPoint& q : qp) s += std::pow(fe_at(m.cell(c), q, u).u, 2) * q.JxW;
  }
  return std::sqrt(s);
}

double h1_seminorm(const FeSpace& space, const Eigen::VectorXd& u) {
  check_sizes(space, {&u});
  const Mesh& m = space.mesh();
  double s = 0.0;
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    cell_quadrature(m, c, true, qp);
    for (const QPoint& q : qp) s += fe_at(m.cell(c), q, u).g.squaredNorm() * q.JxW;
  }
  return std::sqrt(s);
}

OrderFit fit_order(std::span<const double> H, std::span<const double> e) {
  require(H.size() == e.size() && H.size() >= 2, ErrorCode::InvalidArgument, "order fit needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    require(H[i] > 0.0 && e[i] > 0.0 && std::isfinite(e[i]), ErrorCode::InvalidArgument,
            "order fit needs positive finite values");
    const double x = std::log(H[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  require(den > 0.0, ErrorCode::InvalidArgument, "order fit needs distinct H values");
  OrderFit f;
  f.alpha = (n * sxy - sx * sy) / den;
  f.c = std::exp((sy - f.alpha * sx) / n);
  return f;
}

std::array<OrderFit, 4> ConvergenceRecord::fits() const {
  std::vector<double> H, a, b, c, d;
  for (const auto& r : rows) {
    H.push_back(r.H);
    a.push_back(r.err.v_h1);
    b.push_back(r.err.v_l2);
    c.push_back(r.err.p_l2);
    d.push_back(r.err.p_h1);
  }
  return {fit_order(H, a), fit_order(H, b), fit_order(H, c), fit_order(H, d)};
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_convergence_csv(const ConvergenceRecord& rec, std::ostream& os) {
  os << "H,err_v_h1,err_v_l2,err_p_l2,err_p_h1\n";
  for (const auto& r : rec.rows)
    os << fmt6(r.H) << ',' << fmt6(r.err.v_h1) << ',' << fmt6(r.err.v_l2) << ',' << fmt6(r.err.p_l2) << ','
       << fmt6(r.err.p_h1) << '\n';
  if (rec.rows.size() >= 2) {
    const auto f = rec.fits();
    os << "order," << fmt6(f[0].alpha) << ',' << fmt6(f[1].alpha) << ',' << fmt6(f[2].alpha) << ','
       << fmt6(f[3].alpha) << '\n';
  }
}

namespace {

SparseMatrix laplacian(const FeSpace& space) {
  const Mesh& m = space.mesh();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    cell_quadrature(m, c, false, qp);
    for (int i = 0; i < cell.n_vertices(); ++i)
      for (int j = 0; j < cell.n_vertices(); ++j) {
        double a = 0.0;
        for (const QPoint& q : qp)
          a += q.grad[static_cast<std::size_t>(i)].dot(q.grad[static_cast<std::size_t>(j)]) * q.JxW;
        trip.emplace_back(cell.v[static_cast<std::size_t>(i)], cell.v[static_cast<std::size_t>(j)], a);
      }
  }
  SparseMatrix K(space.n_dofs(), space.n_dofs());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

}  // namespace

Eigen::VectorXd ritz_project(const FeSpace& space, const ScalarFn& u, const std::function<Vec2(const Vec2&)>& grad_u,
                             RitzMode mode) {
  const Mesh& m = space.mesh();
  const Index n = space.n_dofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  double u_int = 0.0, area = 0.0;
  std::vector<QPoint> qp;
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    cell_quadrature(m, c, true, qp);
    for (const QPoint& q : qp) {
      const Vec2 g = grad_u(q.x);
      for (int i = 0; i < cell.n_vertices(); ++i)
        b[cell.v[static_cast<std::size_t>(i)]] += g.dot(q.grad[static_cast<std::size_t>(i)]) * q.JxW;
      u_int += u(q.x) * q.JxW;
      area += q.JxW;
    }
  }
  const SparseMatrix K = laplacian(space);
  if (mode == RitzMode::Dirichlet) {
    require(space.n_dirichlet() > 0, ErrorCode::InvalidArgument, "Ritz projection without Dirichlet dofs is singular");
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i)
      if (space.is_dirichlet(i)) g[i] = u(space.dof_point(i));
    b -= K * g;
    for (int r = 0; r < K.outerSize(); ++r) {
      if (space.is_dirichlet(r)) {
        trip.emplace_back(r, r, 1.0);
        b[r] = g[r];
        continue;
      }
      for (SparseMatrix::InnerIterator it(K, r); it; ++it)
        if (!space.is_dirichlet(it.col())) trip.emplace_back(r, it.col(), it.value());
    }
    SparseMatrix A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return solve(A, b).x;
  }
  // Bordered system with the mean constraint.
  const Eigen::VectorXd w = basis_integrals(space);
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < K.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(K, r); it; ++it) trip.emplace_back(r, it.col(), it.value());
  for (Index i = 0; i < n; ++i) {
    trip.emplace_back(i, n, w[i]);
    trip.emplace_back(n, i, w[i]);
  }
  SparseMatrix A(n + 1, n + 1);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs(n + 1);
  rhs << b, u_int * (w.sum() / area);
  return solve(A, rhs).x.head(n);
}

double triple_norm(const FeSpace& space, const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                   const Eigen::VectorXd& p, double nu) {
  const double H = space.mesh().H();
  const double a = h1_seminorm(space, v1), b = h1_seminorm(space, v2);
  const double c = l2_norm(space, p), d = h1_seminorm(space, p);
  return std::sqrt(nu * (a * a + b * b) + c * c + H * H * d * d);
}

StokesSystem assemble_problem(const ProblemSetup& setup, const FeSpace& space, GaugeReport* gauge) {
  const ExactSolution& ex = setup.exact;
  StokesSystem sys = assemble_stokes(space, space, ex.nu(), [&ex](const Vec2& x) { return ex.forcing(x); });
  if (setup.stab.variant != StabVariant::None)
    add_pressure_block(sys, assemble_stabilization(space, setup.stab).matrix);
  apply_dirichlet(sys, space, [&ex](const Vec2& x) { return ex.velocity(x); });
  const GaugeReport g = pressure_gauge(sys, space, setup.gauge);
  if (gauge != nullptr) *gauge = g;
  return sys;
}

DiscreteSolution solve_problem(const ProblemSetup& setup) {
  require(setup.mesh != nullptr, ErrorCode::InvalidArgument, "problem without mesh");
  DiscreteSolution out;
  out.space = std::make_shared<const FeSpace>(setup.mesh, setup.dirichlet_tags);
  const StokesSystem sys = assemble_problem(setup, *out.space, &out.gauge);
  StokesSolution s = solve_stokes(sys, *out.space, setup.tol);
  out.v1 = std::move(s.v1);
  out.v2 = std::move(s.v2);
  out.p = std::move(s.p);
  out.report = s.report;
  return out;
}

namespace {

int patches_for(double H) {
  require(H > 0.0 && H <= 2.0, ErrorCode::InvalidArgument, "H must lie in (0, 2]");
  const double n = 2.0 / H;
  const long r = std::lround(n);
  require(std::abs(n - static_cast<double>(r)) < 1e-9 * n, ErrorCode::InvalidArgument,
          "2/H must be an integer patch count");
  return static_cast<int>(r);
}

constexpr Box kSquare{-1.0, -1.0, 1.0, 1.0};

}  // namespace

std::shared_ptr<const Mesh> example1_mesh(double H, double ratio) {
  return std::make_shared<const Mesh>(build_alternating_mesh(patches_for(H), ratio, kSquare, true));
}

std::shared_ptr<const Mesh> example2_mesh(double H, double x0, double y0, double radius, double snap_tol) {
  const PatchMesh pm(patches_for(H), patches_for(H), kSquare);
  return std::make_shared<const Mesh>(
      build_lmfem_mesh(pm, ImplicitBoundary::circle_hole(Vec2(x0, y0), radius), snap_tol));
}

std::vector<int> example1_dirichlet_tags() { return {kLeft, kBottom, kTop}; }
std::vector<int> example2_dirichlet_tags() { return {kLeft, kBottom, kTop, kInterface}; }

std::vector<SweepRow> x0_sweep(const SweepConfig& cfg) {
  require(cfg.step > 0.0, ErrorCode::InvalidArgument, "sweep step must be positive");
  require(cfg.x0_end >= cfg.x0_begin, ErrorCode::InvalidArgument, "empty sweep range");
  const auto n = static_cast<std::size_t>(std::floor((cfg.x0_end - cfg.x0_begin) / cfg.step + 1e-9)) + 1;
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      SweepRow& r = rows[i];
      r.x0 = cfg.x0_begin + static_cast<double>(i) * cfg.step;
      try {
        ProblemSetup setup;
        setup.mesh = example2_mesh(cfg.H, r.x0, cfg.y0, cfg.radius, cfg.snap_tol);
        const QualityReport q = mesh_quality_report(*setup.mesh);
        r.kappa_max = q.kappa_max;
        r.K_min = q.K_min;
        setup.dirichlet_tags = example2_dirichlet_tags();
        setup.stab = cfg.stab;
        setup.exact = ExactSolution(r.x0, cfg.y0, cfg.radius);
        const DiscreteSolution s = solve_problem(setup);
        r.residual = s.report.residual;
        r.p_h1 = h1_seminorm(*s.space, s.p);
        r.ok = std::isfinite(r.p_h1);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(cfg.threads, static_cast<int>(n)));
  std::vector<std::jthread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(work);
  work();
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& os) {
  os << "x0,p_h1_norm,kappa_max,K_min\n";
  for (const SweepRow& r : rows) {
    if (!r.ok) {
      os << fmt6(r.x0) << ",nan," << fmt6(r.kappa_max) << ',' << fmt6(r.K_min) << '\n';
      continue;
    }
    os << fmt6(r.x0) << ',' << fmt6(r.p_h1) << ',' << fmt6(r.kappa_max) << ',' << fmt6(r.K_min) << '\n';
  }
}

void write_vtk_fields(const Mesh& m, const Eigen::VectorXd& v1, const Eigen::VectorXd& v2, const Eigen::VectorXd& p,
                      std::ostream& os) {
  require(v1.size() == m.n_vertices() && v2.size() == m.n_vertices() && p.size() == m.n_vertices(),
          ErrorCode::InvalidArgument, "field size mismatch");
  write_vtk_mesh(m, os);
  os << "POINT_DATA " << m.n_vertices() << "\nVECTORS v double\n";
  for (Index i = 0; i < m.n_vertices(); ++i) os << v1[i] << ' ' << v2[i] << " 0\n";
  os << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (Index i = 0; i < m.n_vertices(); ++i) os << p[i] << '\n';
}

}  // namespace anisostokes
