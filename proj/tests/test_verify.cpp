#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "anisostokes/verify.hpp"
#include "support.hpp"

using namespace anisostokes;

namespace {

std::span<const double> view(const std::vector<double>& v) { return {v.data(), v.size()}; }

// Vertex index of the y-mirror of each vertex, or -1.
std::vector<Index> mirror_map(const Mesh& m) {
  std::map<std::pair<long long, long long>, Index> key;
  auto k = [](const Vec2& x) { return std::make_pair(std::llround(x.x() * 1e9), std::llround(x.y() * 1e9)); };
  for (Index v = 0; v < m.n_vertices(); ++v) key[k(m.vertex(v))] = v;
  std::vector<Index> out(static_cast<std::size_t>(m.n_vertices()), -1);
  for (Index v = 0; v < m.n_vertices(); ++v) {
    const Vec2 x = m.vertex(v);
    const auto it = key.find(k(Vec2(x.x(), -x.y())));
    if (it != key.end()) out[static_cast<std::size_t>(v)] = it->second;
  }
  return out;
}

}  // namespace

TEST(ExactSolution, PointValues) {
  const ExactSolution ex = manufactured_solution(0.0, 0.0, 0.4);
  EXPECT_NEAR(ex.velocity(Vec2(0, 0)).x(), 0.0, 1e-15);
  EXPECT_NEAR(ex.velocity(Vec2(0, 0)).y(), -0.0768, 1e-15);
  EXPECT_NEAR(ex.pressure(Vec2(0, 0)), 0.0, 1e-15);
  for (double y : {-1.0, -0.3, 0.7}) {
    const ExactSolution e2(0.1, -0.2, 0.3);
    EXPECT_EQ(e2.velocity(Vec2(1, y)).norm(), 0.0);
    EXPECT_EQ(e2.pressure(Vec2(1, y)), 0.0);
  }
  for (int i = 0; i < 16; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 16.0;
    EXPECT_NEAR(ex.velocity(Vec2(0.4 * std::cos(t), 0.4 * std::sin(t))).norm(), 0.0, 1e-15);
  }
  try {
    (void)manufactured_solution(0, 0, -0.4);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(ExactSolution, ResidualsVanish) {
  for (const ExactSolution& ex : {ExactSolution(0, 0, 0.4), ExactSolution(0.006, 0.0, 0.4), ExactSolution(0.1, -0.2, 0.3, 2.5)}) {
    const auto r = testkit::exact_residuals(ex, 1000, 99);
    EXPECT_LT(r.divergence, 1e-10);
    EXPECT_LT(r.momentum, 1e-8);
    EXPECT_LT(r.do_nothing, 1e-10);
  }
}

TEST(ExactSolution, DerivativesMatchFiniteDifferences) {
  const ExactSolution ex(0.006, 0.0, 0.4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  constexpr double h = 1e-6;
  for (int s = 0; s < 200; ++s) {
    const Vec2 x(u(rng), u(rng)), dx(h, 0), dy(0, h);
    const Eigen::Matrix2d G = ex.velocity_gradient(x);
    const Vec2 vx = (ex.velocity(x + dx) - ex.velocity(x - dx)) / (2 * h);
    const Vec2 vy = (ex.velocity(x + dy) - ex.velocity(x - dy)) / (2 * h);
    EXPECT_NEAR(G(0, 0), vx.x(), 1e-7);
    EXPECT_NEAR(G(1, 0), vx.y(), 1e-7);
    EXPECT_NEAR(G(0, 1), vy.x(), 1e-7);
    EXPECT_NEAR(G(1, 1), vy.y(), 1e-7);
    const Vec2 gp = ex.pressure_gradient(x);
    EXPECT_NEAR(gp.x(), (ex.pressure(x + dx) - ex.pressure(x - dx)) / (2 * h), 1e-7);
    EXPECT_NEAR(gp.y(), (ex.pressure(x + dy) - ex.pressure(x - dy)) / (2 * h), 1e-7);
  }
}

TEST(Norms, ClosedForms) {
  const auto mesh = example1_mesh(0.25);
  const FeSpace space(mesh, {});
  const Eigen::VectorXd x = interpolate(space, [](const Vec2& p) { return p.x(); });
  EXPECT_NEAR(l2_norm(space, x), 2.0 / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(h1_seminorm(space, x), 2.0, 1e-12);

  // Zero discrete fields: the error norms are the norms of the exact fields.
  const ExactSolution ex(0.0, 0.0, 0.4);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(space.n_dofs());
  const ErrorNorms e = error_norms(space, zero, zero, zero, ex);
  std::vector<QPoint> qp;
  double pl2 = 0.0;
  for (Index c = 0; c < mesh->n_cells(); ++c) {
    cell_quadrature(*mesh, c, true, qp);
    for (const QPoint& q : qp) pl2 += std::pow(ex.pressure(q.x), 2) * q.JxW;
  }
  EXPECT_NEAR(e.p_l2, std::sqrt(pl2), 1e-12 * e.p_l2);
  EXPECT_THROW((void)l2_norm(space, Eigen::VectorXd::Zero(3)), Error);
  EXPECT_EQ(l2_norm(space, zero), 0.0);
}

TEST(Norms, TripleNorm) {
  const auto mesh = example2_mesh(0.25, 0.0, 0.0, 0.4);
  const FeSpace space(mesh, {});
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(space.n_dofs());
  EXPECT_EQ(triple_norm(space, z, z, z, 1.0), 0.0);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(space.n_dofs(), -3.0);
  EXPECT_NEAR(triple_norm(space, z, z, c, 1.0), 3.0 * std::sqrt(mesh->total_area()), 1e-12);

  const Eigen::VectorXd a = testkit::random_vector(space.n_dofs(), 1), b = testkit::random_vector(space.n_dofs(), 2),
                        p = testkit::random_vector(space.n_dofs(), 3);
  const double H = mesh->H(), nu = 0.7;
  // Term-by-term recomputation with the stiffness-rule quadrature.
  std::vector<QPoint> qp;
  double va = 0, pl = 0, ph = 0;
  for (Index cidx = 0; cidx < mesh->n_cells(); ++cidx) {
    const Cell& cell = mesh->cell(cidx);
    cell_quadrature(*mesh, cidx, false, qp);
    for (const QPoint& q : qp) {
      Vec2 ga = Vec2::Zero(), gb = Vec2::Zero(), gp = Vec2::Zero();
      double pv = 0;
      for (int k = 0; k < cell.n_vertices(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        ga += a[cell.v[kk]] * q.grad[kk];
        gb += b[cell.v[kk]] * q.grad[kk];
        gp += p[cell.v[kk]] * q.grad[kk];
        pv += p[cell.v[kk]] * q.phi[kk];
      }
      va += (ga.squaredNorm() + gb.squaredNorm()) * q.JxW;
      ph += gp.squaredNorm() * q.JxW;
      pl += pv * pv * q.JxW;
    }
  }
  const double ref = std::sqrt(nu * va + pl + H * H * ph);
  EXPECT_NEAR(triple_norm(space, a, b, p, nu), ref, 1e-12 * ref);
}

TEST(FitOrder, Examples) {
  const std::vector<double> H{0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> e;
  for (double h : H) e.push_back(h * h);
  EXPECT_NEAR(fit_order(view(H), view(e)).alpha, 2.0, 1e-12);
  EXPECT_NEAR(fit_order(view(H), view(e)).c, 1.0, 1e-12);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  std::vector<double> n;
  for (double h : H) n.push_back(3.0 * std::pow(h, 1.5) * (1.0 + noise(rng)));
  EXPECT_NEAR(fit_order(view(H), view(n)).alpha, 1.5, 0.05);

  const std::vector<double> table{20.55, 10.14, 5.02, 2.50};
  EXPECT_NEAR(fit_order(view(H), view(table)).alpha, 1.02, 0.01);

  auto rejects = [&](std::vector<double> hh, std::vector<double> ee) {
    try {
      (void)fit_order(view(hh), view(ee));
    } catch (const Error& err) {
      return err.code() == ErrorCode::InvalidArgument;
    }
    return false;
  };
  EXPECT_TRUE(rejects({0.5, 0.25}, {1.0, 0.0}));
  EXPECT_TRUE(rejects({0.5, 0.25}, {1.0, -1.0}));
  EXPECT_TRUE(rejects({0.5}, {1.0}));
  EXPECT_TRUE(rejects({0.5, 0.5}, {1.0, 2.0}));
  EXPECT_TRUE(rejects({0.5, 0.25}, {1.0, std::nan("")}));
}

TEST(Ritz, LinearFixedPointAndMean) {
  const auto mesh = example2_mesh(0.125, 0.006, 0.0, 0.4);
  const FeSpace space(mesh, example2_dirichlet_tags());
  const ScalarFn u = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - 0.5 * x.y(); };
  const auto gu = [](const Vec2&) { return Vec2(2.0, -0.5); };
  const Eigen::VectorXd I = interpolate(space, u);
  EXPECT_LT((ritz_project(space, u, gu, RitzMode::Dirichlet) - I).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((ritz_project(space, u, gu, RitzMode::MeanValue) - I).cwiseAbs().maxCoeff(), 1e-9);

  const ScalarFn s = [](const Vec2& x) { return std::sin(3.0 * x.x()) * std::cos(2.0 * x.y()); };
  const auto gs = [](const Vec2& x) {
    return Vec2(3.0 * std::cos(3.0 * x.x()) * std::cos(2.0 * x.y()), -2.0 * std::sin(3.0 * x.x()) * std::sin(2.0 * x.y()));
  };
  const Eigen::VectorXd R = ritz_project(space, s, gs, RitzMode::MeanValue);
  // mean of s over the discrete domain by the same quadrature
  std::vector<QPoint> qp;
  double si = 0, area = 0;
  for (Index c = 0; c < mesh->n_cells(); ++c) {
    cell_quadrature(*mesh, c, true, qp);
    for (const QPoint& q : qp) {
      si += s(q.x) * q.JxW;
      area += q.JxW;
    }
  }
  EXPECT_NEAR(mean_value(space, R), si / area, 1e-10);

  try {
    (void)ritz_project(FeSpace(mesh, {}), u, gu, RitzMode::Dirichlet);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Ritz, FirstOrderGradientError) {
  const ScalarFn u = [](const Vec2& x) { return std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y()); };
  const auto gu = [](const Vec2& x) {
    const double pi = std::numbers::pi;
    return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()), pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  std::vector<double> H, e;
  for (double h : {0.25, 0.125, 0.0625}) {
    const auto mesh = example1_mesh(h, 0.5);
    const std::vector<int> all{kLeft, kRight, kBottom, kTop};
    const FeSpace space(mesh, all);
    const Eigen::VectorXd R = ritz_project(space, u, gu, RitzMode::Dirichlet);
    std::vector<QPoint> qp;
    double err = 0.0;
    for (Index c = 0; c < mesh->n_cells(); ++c) {
      const Cell& cell = mesh->cell(c);
      cell_quadrature(*mesh, c, true, qp);
      for (const QPoint& q : qp) {
        Vec2 g = Vec2::Zero();
        for (int k = 0; k < cell.n_vertices(); ++k)
          g += R[cell.v[static_cast<std::size_t>(k)]] * q.grad[static_cast<std::size_t>(k)];
        err += (gu(q.x) - g).squaredNorm() * q.JxW;
      }
    }
    H.push_back(h);
    e.push_back(std::sqrt(err));
  }
  EXPECT_NEAR(e[0] / e[1], 2.0, 0.15);
  EXPECT_NEAR(e[1] / e[2], 2.0, 0.1);
  EXPECT_NEAR(fit_order(view(H), view(e)).alpha, 1.0, 0.1);
}

TEST(Csv, ConvergenceAndSweepFormats) {
  ConvergenceRecord rec;
  rec.rows.push_back({0.5, {4.0, 2.0, 1.0, 8.0}});
  rec.rows.push_back({0.25, {2.0, 0.5, 0.5, 2.0}});
  std::ostringstream os;
  write_convergence_csv(rec, os);
  EXPECT_EQ(os.str(), "H,err_v_h1,err_v_l2,err_p_l2,err_p_h1\n0.5,4,2,1,8\n0.25,2,0.5,0.5,2\norder,1,2,1,2\n");

  std::vector<SweepRow> rows(2);
  rows[0] = {0.0, 1.5, 8.59, 8.6e-4, 1e-15, true, ""};
  rows[1] = {0.001, 0.0, 9.0, 1e-4, 0.0, false, "boom"};
  std::ostringstream ss;
  write_sweep_csv(rows, ss);
  EXPECT_EQ(ss.str(), "x0,p_h1_norm,kappa_max,K_min\n0,1.5,8.59,0.00086\n0.001,nan,9,0.0001\n");
  EXPECT_EQ(fmt6(1.0 / 3.0), "0.333333");
  EXPECT_EQ(fmt6(1e-9), "1e-09");
}

TEST(Csv, VtkFields) {
  const auto mesh = example1_mesh(0.5);
  const FeSpace space(mesh, {});
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(space.n_dofs());
  std::ostringstream os;
  write_vtk_fields(*mesh, z, z, z, os);
  const std::string s = os.str();
  EXPECT_NE(s.find("# vtk DataFile Version"), std::string::npos);
  EXPECT_NE(s.find("POINT_DATA " + std::to_string(mesh->n_vertices())), std::string::npos);
  EXPECT_NE(s.find("VECTORS v double"), std::string::npos);
  EXPECT_NE(s.find("SCALARS p double 1"), std::string::npos);
  EXPECT_THROW(write_vtk_fields(*mesh, Eigen::VectorXd::Zero(2), z, z, os), Error);
}

TEST(Symmetry, MirroredSolutionParities) {
  // With y0 = 0, v1 and p are odd in y and v2 is even.
  ProblemSetup setup;
  setup.mesh = example2_mesh(0.125, 0.0, 0.0, 0.4);
  setup.dirichlet_tags = example2_dirichlet_tags();
  setup.stab = StabConfig::uniform(StabVariant::S, 2.5e-3);
  const std::vector<Index> mirror = mirror_map(*setup.mesh);
  for (Index m : mirror) ASSERT_GE(m, 0);
  const DiscreteSolution s = solve_problem(setup);
  double d1 = 0, d2 = 0, dp = 0;
  for (Index v = 0; v < setup.mesh->n_vertices(); ++v) {
    const Index w = mirror[static_cast<std::size_t>(v)];
    d1 = std::max(d1, std::abs(s.v1[v] + s.v1[w]));
    d2 = std::max(d2, std::abs(s.v2[v] - s.v2[w]));
    dp = std::max(dp, std::abs(s.p[v] + s.p[w]));
  }
  EXPECT_LT(d1, 1e-8);
  EXPECT_LT(d2, 1e-8);
  EXPECT_LT(dp, 1e-8);
}

TEST(Sweep, MirroredCentresAgree) {
  // Moving the centre to -y0 mirrors the whole problem.
  SweepConfig a;
  a.H = 0.25;
  a.x0_begin = 0.0;
  a.x0_end = 0.01;
  a.step = 5e-3;
  a.y0 = 0.02;
  SweepConfig b = a;
  b.y0 = -0.02;
  const auto ra = x0_sweep(a), rb = x0_sweep(b);
  ASSERT_EQ(ra.size(), 3u);
  ASSERT_EQ(rb.size(), 3u);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ASSERT_TRUE(ra[i].ok && rb[i].ok);
    EXPECT_NEAR(ra[i].p_h1, rb[i].p_h1, 1e-8 * ra[i].p_h1);
    EXPECT_NEAR(ra[i].kappa_max, rb[i].kappa_max, 1e-8 * ra[i].kappa_max);
    EXPECT_LT(ra[i].residual, 1e-10);
  }
}

TEST(Sweep, FailuresRecordedAndThreadsAgree) {
  SweepConfig c;
  c.H = 0.25;
  c.x0_begin = 0.0;
  c.x0_end = 0.004;
  c.step = 1e-3;
  const auto one = x0_sweep(c);
  c.threads = 3;
  const auto three = x0_sweep(c);
  ASSERT_EQ(one.size(), 5u);
  ASSERT_EQ(three.size(), 5u);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].x0, three[i].x0);
    EXPECT_EQ(one[i].p_h1, three[i].p_h1);
  }
  SweepConfig bad = c;
  bad.step = 0.0;
  EXPECT_THROW((void)x0_sweep(bad), Error);
}
