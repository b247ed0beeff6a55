#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace anisostokes::testkit {

namespace {

double sample_param(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double lo = 1e-6, hi = 1.0 - 1e-6;
  // Half the samples crowd the patch corners, where the angles degenerate.
  if (u(rng) < 0.5) return lo + (hi - lo) * u(rng);
  const double t = std::pow(10.0, -6.0 * u(rng));
  return u(rng) < 0.5 ? std::max(t, lo) : std::min(1.0 - t, hi);
}

// Rotation by k quarter turns, optionally preceded by the reflection i -> -i.
CutPattern transform(const CutPattern& p, int k, bool reflect) {
  CutPattern q;
  std::array<int, 4> s = p.corner_sign;
  std::array<double, 4> t = p.edge_param;
  if (reflect) {
    std::array<int, 4> s2{};
    std::array<double, 4> t2{};
    for (int i = 0; i < 4; ++i) {
      s2[static_cast<std::size_t>((4 - i) % 4)] = s[static_cast<std::size_t>(i)];
      const double ti = t[static_cast<std::size_t>(i)];
      t2[static_cast<std::size_t>((7 - i) % 4)] = ti < 0.0 ? -1.0 : 1.0 - ti;
    }
    s = s2;
    t = t2;
  }
  for (int i = 0; i < 4; ++i) {
    q.corner_sign[static_cast<std::size_t>((i + k) % 4)] = s[static_cast<std::size_t>(i)];
    q.edge_param[static_cast<std::size_t>((i + k) % 4)] = t[static_cast<std::size_t>(i)];
  }
  return classify_cut(q.corner_sign, q.edge_param);
}

}  // namespace

RandomCut random_cut(CutKind kind, std::uint64_t& state) {
  std::mt19937_64 rng(state);
  state = rng();
  CutPattern base;
  switch (kind) {
    case CutKind::OppositeEdges:
      base.corner_sign = {-1, -1, 1, 1};
      base.edge_param = {-1, sample_param(rng), -1, sample_param(rng)};
      break;
    case CutKind::AdjacentEdges:
      base.corner_sign = {-1, -1, 1, -1};
      base.edge_param = {-1, sample_param(rng), sample_param(rng), -1};
      break;
    case CutKind::VertexEdge:
      if (rng() % 2 == 0) {
        base.corner_sign = {0, -1, 1, 1};
        base.edge_param = {-1, sample_param(rng), -1, -1};
      } else {
        base.corner_sign = {0, -1, -1, 1};
        base.edge_param = {-1, -1, sample_param(rng), -1};
      }
      break;
    case CutKind::Diagonal:
      base.corner_sign = {0, -1, 0, 1};
      break;
    case CutKind::None:
      base.corner_sign = {-1, -1, -1, -1};
      break;
  }
  RandomCut out;
  out.corners = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  out.pattern = transform(base, static_cast<int>(rng() % 4), rng() % 2 == 1);
  if (rng() % 2 == 0)
    for (auto& s : out.pattern.corner_sign) s = -s;
  return out;
}

CutSweep cut_sweep(int samples_per_kind, std::uint64_t seed) {
  CutSweep out;
  std::uint64_t state = seed;
  for (CutKind kind : {CutKind::OppositeEdges, CutKind::AdjacentEdges, CutKind::VertexEdge, CutKind::Diagonal}) {
    for (int i = 0; i < samples_per_kind; ++i) {
      const RandomCut rc = random_cut(kind, state);
      const PatchSubdivision sub = subdivide_patch(rc.corners, rc.pattern);
      double area = 0.0;
      for (const Cell& c : sub.cells) {
        std::array<Vec2, 4> poly;
        for (int k = 0; k < c.n_vertices(); ++k)
          poly[static_cast<std::size_t>(k)] = sub.nodes[static_cast<std::size_t>(c.v[static_cast<std::size_t>(k)])];
        const std::span<const Vec2> ps(poly.data(), static_cast<std::size_t>(c.n_vertices()));
        area += signed_area(ps);
        if (c.kind == CellKind::Triangle) {
          out.max_angle = std::max(out.max_angle, max_interior_angle(ps));
          ++out.triangles;
        }
      }
      out.max_area_defect = std::max(out.max_area_defect, std::abs(area - 1.0));
    }
  }
  return out;
}

Eigen::VectorXd random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

StabChecks check_stabilization(const FeSpace& space, const StabConfig& cfg, int samples, std::uint64_t seed) {
  const StabMatrix S = assemble_stabilization(space, cfg);
  StabChecks out;
  const SparseMatrix St = S.matrix.transpose();
  const SparseMatrix D = S.matrix - St;
  for (int k = 0; k < S.matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(S.matrix, k); it; ++it) out.max_abs = std::max(out.max_abs, std::abs(it.value()));
  double dmax = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(D, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  const double scale = out.max_abs > 0.0 ? out.max_abs : 1.0;
  out.asymmetry = dmax / scale;
  out.kernel = (S.matrix * Eigen::VectorXd::Ones(space.n_dofs())).lpNorm<Eigen::Infinity>() / scale;
  out.min_rayleigh = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd p = random_vector(space.n_dofs(), seed + static_cast<std::uint64_t>(s));
    out.min_rayleigh = std::min(out.min_rayleigh, stab_energy(S, p) / p.squaredNorm());
  }
  return out;
}

double stab_energy_oracle_S(const FeSpace& space, const StabConfig& cfg, const Eigen::VectorXd& p) {
  const Mesh& m = space.mesh();
  const double H2 = m.H() * m.H();
  const double g = 1.0 / std::sqrt(3.0);
  const std::array<double, 2> tq{0.5 * (1.0 - g), 0.5 * (1.0 + g)};
  auto grad_at = [&](Index c, const Vec2& x) {
    const ElementMap map(m, c);
    const auto xi = map.inverse(x, 1e-8);
    if (!xi) fail(ErrorCode::InternalError, "edge point not in adjacent cell");
    const auto G = map.grad_shape(*xi);
    Vec2 out = Vec2::Zero();
    const Cell& cell = m.cell(c);
    for (int k = 0; k < cell.n_vertices(); ++k)
      out += p[cell.v[static_cast<std::size_t>(k)]] * G[static_cast<std::size_t>(k)];
    return out;
  };
  double total = 0.0;
  for (const Edge& e : m.edges()) {
    if (e.cls == EdgeClass::BoundaryExterior) continue;
    const Vec2 a = m.vertex(e.v[0]), b = m.vertex(e.v[1]);
    const double len = (b - a).norm();
    const int sides = e.is_boundary() ? 1 : 2;
    std::array<double, 2> hn{};
    for (int s = 0; s < sides; ++s) hn[static_cast<std::size_t>(s)] = m.cell_area(e.cells[static_cast<std::size_t>(s)]) / len;
    if (e.cls == EdgeClass::Regular && cfg.skip_outer_patch_jumps && e.outer_patch) continue;
    for (double t : tq) {
      const Vec2 x = a + t * (b - a);
      if (e.cls == EdgeClass::Aniso) {
        double mean = 0.0;
        for (int s = 0; s < sides; ++s)
          mean += hn[static_cast<std::size_t>(s)] * grad_at(e.cells[static_cast<std::size_t>(s)], x).squaredNorm();
        total += cfg.gamma_aniso * H2 * 0.5 * len * mean / sides;
      } else {
        const Vec2 jump = grad_at(e.cells[0], x) - grad_at(e.cells[1], x);
        total += cfg.gamma_regular * H2 * 0.5 * len * 0.5 * (hn[0] + hn[1]) * jump.squaredNorm();
      }
    }
  }
  return total;
}

Lemma3Constants lemma3_constants(double H, double ratio, int samples, std::uint64_t seed) {
  const int n = static_cast<int>(std::lround(2.0 / H));
  const auto mesh = std::make_shared<const Mesh>(build_alternating_mesh(n, ratio, Box{-1, -1, 1, 1}, true));
  const FeSpace space(mesh, {});
  const StabConfig cfg = StabConfig::uniform(StabVariant::S, 1.0);
  const StabMatrix S = assemble_S(space, cfg);
  const auto ht = tilde_h_min(*mesh);
  Lemma3Constants out;
  std::vector<QPoint> qp;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd p = random_vector(space.n_dofs(), seed + static_cast<std::uint64_t>(s));
    const double sp = stab_energy(S, p);
    const double gp = h1_seminorm(space, p);
    out.lower = std::max(out.lower, H * H * gp * gp / sp);
    out.upper = std::max(out.upper, sp / (H * H * gp * gp));

    const std::vector<Vec2> tau = tau_h(space, scaled_gradient(space, p));
    Eigen::VectorXd tx(space.n_dofs()), ty(space.n_dofs());
    for (Index i = 0; i < space.n_dofs(); ++i) {
      tx[i] = tau[static_cast<std::size_t>(i)].x();
      ty[i] = tau[static_cast<std::size_t>(i)].y();
    }
    out.tau_stab = std::max(out.tau_stab, std::hypot(h1_seminorm(space, tx), h1_seminorm(space, ty)) / (H * gp));

    const std::vector<double> SL = cellwise_S(space, cfg, p);
    double smax = 0.0;
    for (double v : SL) smax = std::max(smax, v);
    for (Index c = 0; c < mesh->n_cells(); ++c) {
      const Cell& cell = mesh->cell(c);
      const double h2 = ht[static_cast<std::size_t>(c)] * ht[static_cast<std::size_t>(c)];
      cell_quadrature(*mesh, c, true, qp);
      double defect = 0.0;
      for (const QPoint& q : qp) {
        Vec2 g = Vec2::Zero(), t = Vec2::Zero();
        for (int k = 0; k < cell.n_vertices(); ++k) {
          const Index v = cell.v[static_cast<std::size_t>(k)];
          g += p[v] * q.grad[static_cast<std::size_t>(k)];
          t += q.phi[static_cast<std::size_t>(k)] * tau[static_cast<std::size_t>(v)];
        }
        defect += q.JxW * (h2 * g - t).squaredNorm();
      }
      std::vector<Index> nb;
      for (int k = 0; k < cell.n_vertices(); ++k)
        for (Index L : mesh->vertex_cells(cell.v[static_cast<std::size_t>(k)])) nb.push_back(L);
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      double local = 0.0;
      for (Index L : nb) local += SL[static_cast<std::size_t>(L)];
      if (local <= 1e-14 * smax) continue;
      out.proj = std::max(out.proj, defect / (h2 * local));
    }
  }
  return out;
}

double galerkin_identity_defect(const std::shared_ptr<const Mesh>& mesh, double nu, std::uint64_t seed) {
  const FeSpace space(mesh, {});
  const StokesSystem sys = assemble_stokes(space, space, nu, [](const Vec2&) { return Vec2::Zero(); });
  const Eigen::VectorXd x = random_vector(sys.size(), seed);
  const double form = x.dot(sys.matrix * x);
  const Index n = space.n_dofs();
  const double a = h1_seminorm(space, x.segment(0, n)), b = h1_seminorm(space, x.segment(n, n));
  const double ref = nu * (a * a + b * b);
  return std::abs(form - ref) / ref;
}

ExactResiduals exact_residuals(const ExactSolution& ex, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ExactResiduals out;
  constexpr double h = 1e-5;
  double fmax = 0.0;
  std::vector<std::pair<Vec2, Vec2>> res;
  for (int s = 0; s < samples; ++s) {
    const Vec2 x(u(rng), u(rng));
    const Eigen::Matrix2d G = ex.velocity_gradient(x);
    out.divergence = std::max(out.divergence, std::abs(G.trace()));
    const Vec2 ex1(h, 0.0), ey1(0.0, h);
    const Eigen::Matrix2d dGx = (ex.velocity_gradient(x + ex1) - ex.velocity_gradient(x - ex1)) / (2 * h);
    const Eigen::Matrix2d dGy = (ex.velocity_gradient(x + ey1) - ex.velocity_gradient(x - ey1)) / (2 * h);
    const Vec2 lap(dGx(0, 0) + dGy(0, 1), dGx(1, 0) + dGy(1, 1));
    const Vec2 f = ex.forcing(x);
    fmax = std::max(fmax, f.norm());
    res.emplace_back(-ex.nu() * lap + ex.pressure_gradient(x), f);
    const double y = u(rng);
    const Vec2 xb(1.0, y);
    const Eigen::Matrix2d Gb = ex.velocity_gradient(xb);
    const Vec2 trace = ex.nu() * Gb.col(0) - ex.pressure(xb) * Vec2(1.0, 0.0);
    out.do_nothing = std::max(out.do_nothing, trace.norm());
  }
  for (const auto& [lhs, f] : res) out.momentum = std::max(out.momentum, (lhs - f).norm() / fmax);
  return out;
}

TauChecks tau_checks() {
  TauChecks out;
  {
    const auto mesh = example2_mesh(0.25, 0.0, 0.0, 0.4);
    const FeSpace space(mesh, {});
    auto g = [](const Vec2& x) { return Vec2(x.x() + 2.0 * x.y(), x.x() * x.y()); };
    DgVectorField f;
    f.values.resize(static_cast<std::size_t>(mesh->n_cells()));
    for (Index c = 0; c < mesh->n_cells(); ++c)
      for (int k = 0; k < mesh->cell(c).n_vertices(); ++k)
        f.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] =
            g(mesh->vertex(mesh->cell(c).v[static_cast<std::size_t>(k)]));
    const auto tau = tau_h(space, f);
    for (Index v = 0; v < mesh->n_vertices(); ++v) {
      const double d = mesh->on_boundary(v) ? tau[static_cast<std::size_t>(v)].norm()
                                            : (tau[static_cast<std::size_t>(v)] - g(mesh->vertex(v))).norm();
      (mesh->on_boundary(v) ? out.boundary : out.fixed_point) =
          std::max(mesh->on_boundary(v) ? out.boundary : out.fixed_point, d);
    }
  }
  {
    const double ratio = 1e-3;
    const auto mesh = std::make_shared<const Mesh>(build_alternating_mesh(4, ratio, Box{-1, -1, 1, 1}, true));
    const FeSpace space(mesh, {});
    DgVectorField f;
    f.values.resize(static_cast<std::size_t>(mesh->n_cells()));
    const double thin = ratio * mesh->H();
    for (Index c = 0; c < mesh->n_cells(); ++c) {
      const bool is_thin = mesh->min_edge(c) < 2.0 * thin;
      f.values[static_cast<std::size_t>(c)].fill(is_thin ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0));
    }
    const auto tau = tau_h(space, f);
    out.argmin_ok = true;
    for (Index v = 0; v < mesh->n_vertices(); ++v)
      if (!mesh->on_boundary(v) && (tau[static_cast<std::size_t>(v)] - Vec2(1.0, 0.0)).norm() > 0.0) out.argmin_ok = false;
  }
  {
    // 2x2 squares of side 1/2 with H = 1/2: every h~_min ties.
    std::vector<Vec2> x;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) x.emplace_back(0.5 * i, 0.5 * j);
    auto quad = [](Index a, Region r) {
      Cell c;
      c.kind = CellKind::Quadrilateral;
      c.v = {a, a + 1, a + 4, a + 3};
      c.region = r;
      return c;
    };
    auto pick = [&](Region r2) {
      std::vector<Cell> cells{quad(0, Region::Regular), quad(1, Region::Regular), quad(3, r2), quad(4, Region::Regular)};
      const auto mesh = std::make_shared<const Mesh>(x, cells, 0.5, Box{0, 0, 1, 1});
      const FeSpace space(mesh, {});
      DgVectorField f;
      f.values.resize(4);
      for (std::size_t c = 0; c < 4; ++c) f.values[c].fill(Vec2(static_cast<double>(c), 0.0));
      const auto tau = tau_h(space, f);
      for (Index v = 0; v < mesh->n_vertices(); ++v)
        if (!mesh->on_boundary(v)) return tau[static_cast<std::size_t>(v)].x();
      return -1.0;
    };
    out.aniso_tie_ok = pick(Region::Aniso) == 2.0 && pick(Region::Regular) == 0.0;
  }
  return out;
}

}  // namespace anisostokes::testkit
