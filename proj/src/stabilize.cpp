#include "anisostokes/stabilize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>

namespace anisostokes {

namespace {

using GradBlock = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Shape gradients of both sides of an edge at its two Gauss points, on the union of the side dofs.
struct EdgeData {
  std::vector<Index> dofs;
  int n_sides = 1;
  std::array<std::array<GradBlock, 2>, 2> G;  // [side][gauss point]
  std::array<double, 2> w{};                  // weights times edge length
  Vec2 normal, tangent;
};

EdgeData edge_data(const Mesh& m, const Edge& e) {
  EdgeData d;
  d.n_sides = e.is_boundary() ? 1 : 2;
  for (int s = 0; s < d.n_sides; ++s) {
    const Cell& c = m.cell(e.cells[static_cast<std::size_t>(s)]);
    for (int k = 0; k < c.n_vertices(); ++k) {
      const Index v = c.v[static_cast<std::size_t>(k)];
      if (std::find(d.dofs.begin(), d.dofs.end(), v) == d.dofs.end()) d.dofs.push_back(v);
    }
  }
  const Vec2 t = m.vertex(e.v[1]) - m.vertex(e.v[0]);
  d.tangent = t / t.norm();
  d.normal = Vec2(d.tangent.y(), -d.tangent.x());
  const QuadratureRule& g = gauss_1d(2);
  for (std::size_t q = 0; q < 2; ++q) d.w[q] = g.weights[q] * e.length;
  const auto nd = static_cast<Eigen::Index>(d.dofs.size());
  for (int s = 0; s < d.n_sides; ++s) {
    const Index ci = e.cells[static_cast<std::size_t>(s)];
    const Cell& c = m.cell(ci);
    const int l = e.local[static_cast<std::size_t>(s)];
    const bool forward = c.v[static_cast<std::size_t>(l)] == e.v[0];
    const ElementMap map(m, ci);
    const RefElement& ref = ref_element(c.kind);
    for (std::size_t q = 0; q < 2; ++q) {
      const double tq = g.points[q].x();
      const auto grads = map.grad_shape(ref.edge_point(l, forward ? tq : 1.0 - tq));
      GradBlock& B = d.G[static_cast<std::size_t>(s)][q];
      B = GradBlock::Zero(nd, 2);
      for (int k = 0; k < c.n_vertices(); ++k) {
        const auto pos = std::find(d.dofs.begin(), d.dofs.end(), c.v[static_cast<std::size_t>(k)]) - d.dofs.begin();
        B.row(pos) = grads[static_cast<std::size_t>(k)].transpose();
      }
    }
  }
  return d;
}

bool jump_skipped(const Edge& e, const StabConfig& cfg) { return cfg.skip_outer_patch_jumps && e.outer_patch; }

StabMatrix finish(const FeSpace& space, std::vector<EdgeContribution>&& ledger) {
  StabMatrix out;
  std::vector<Eigen::Triplet<double>> trip;
  for (const EdgeContribution& c : ledger)
    for (std::size_t i = 0; i < c.dofs.size(); ++i)
      for (std::size_t j = 0; j < c.dofs.size(); ++j)
        trip.emplace_back(c.dofs[i], c.dofs[j],
                          c.local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  out.matrix.resize(space.n_dofs(), space.n_dofs());
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.makeCompressed();
  out.ledger = std::move(ledger);
  return out;
}

template <typename Local>
StabMatrix assemble_edges(const FeSpace& space, Local&& local) {
  const Mesh& m = space.mesh();
  std::vector<EdgeContribution> ledger;
  for (Index ei = 0; ei < m.n_edges(); ++ei) {
    const Edge& e = m.edge(ei);
    if (e.cls == EdgeClass::BoundaryExterior) continue;
    const EdgeData d = edge_data(m, e);
    EdgeContribution c;
    c.edge = ei;
    c.dofs = d.dofs;
    c.local = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.dofs.size()), static_cast<Eigen::Index>(d.dofs.size()));
    if (local(e, d, c.local)) ledger.push_back(std::move(c));
  }
  return finish(space, std::move(ledger));
}

}  // namespace

void StabConfig::validate() const {
  if (variant == StabVariant::None) return;
  require(std::isfinite(gamma_aniso) && gamma_aniso > 0.0, ErrorCode::InvalidArgument, "gamma_i must be positive");
  require(std::isfinite(gamma_regular) && gamma_regular > 0.0, ErrorCode::InvalidArgument,
          "gamma_0 must be positive");
}

StabMatrix assemble_S(const FeSpace& space_p, const StabConfig& cfg) {
  cfg.validate();
  const double H2 = space_p.mesh().H() * space_p.mesh().H();
  return assemble_edges(space_p, [&](const Edge& e, const EdgeData& d, Eigen::MatrixXd& M) {
    if (e.cls == EdgeClass::Aniso) {
      const double mean = d.n_sides == 2 ? 0.5 : 1.0;
      for (int s = 0; s < d.n_sides; ++s)
        for (std::size_t q = 0; q < 2; ++q) {
          const GradBlock& G = d.G[static_cast<std::size_t>(s)][q];
          M += cfg.gamma_aniso * H2 * mean * e.h_n[static_cast<std::size_t>(s)] * d.w[q] * G * G.transpose();
        }
      return true;
    }
    if (e.cls != EdgeClass::Regular) fail(ErrorCode::InternalError, "unclassified edge");
    if (jump_skipped(e, cfg)) return false;
    for (std::size_t q = 0; q < 2; ++q) {
      const GradBlock J = d.G[0][q] - d.G[1][q];
      M += cfg.gamma_regular * H2 * e.mean_h_n() * d.w[q] * J * J.transpose();
    }
    return true;
  });
}

StabMatrix assemble_S2(const FeSpace& space_p, const StabConfig& cfg) {
  cfg.validate();
  return assemble_edges(space_p, [&](const Edge& e, const EdgeData& d, Eigen::MatrixXd& M) {
    if (e.cls == EdgeClass::Aniso) {
      const double mean = d.n_sides == 2 ? 0.5 : 1.0;
      const double ht2 = e.h_tau() * e.h_tau();
      for (int s = 0; s < d.n_sides; ++s) {
        const double hn = e.h_n[static_cast<std::size_t>(s)];
        for (std::size_t q = 0; q < 2; ++q) {
          const GradBlock& G = d.G[static_cast<std::size_t>(s)][q];
          const Eigen::VectorXd gn = G * d.normal, gt = G * d.tangent;
          M += cfg.gamma_aniso * mean * hn * d.w[q] * (hn * hn * gn * gn.transpose() + ht2 * gt * gt.transpose());
        }
      }
      return true;
    }
    if (e.cls != EdgeClass::Regular) fail(ErrorCode::InternalError, "unclassified edge");
    if (jump_skipped(e, cfg)) return false;
    const double hn3 = std::pow(e.mean_h_n(), 3);
    for (std::size_t q = 0; q < 2; ++q) {
      const GradBlock J = d.G[0][q] - d.G[1][q];
      M += cfg.gamma_regular * hn3 * d.w[q] * J * J.transpose();
    }
    return true;
  });
}

StabMatrix assemble_Scip(const FeSpace& space_p, const StabConfig& cfg) {
  cfg.validate();
  return assemble_edges(space_p, [&](const Edge& e, const EdgeData& d, Eigen::MatrixXd& M) {
    if (e.is_boundary() || jump_skipped(e, cfg)) return false;
    const double ht3 = std::pow(e.h_tau(), 3);
    for (std::size_t q = 0; q < 2; ++q) {
      const Eigen::VectorXd jn = (d.G[0][q] - d.G[1][q]) * d.normal;
      M += cfg.gamma_regular * ht3 * d.w[q] * jn * jn.transpose();
    }
    return true;
  });
}

StabMatrix assemble_stabilization(const FeSpace& space_p, const StabConfig& cfg) {
  switch (cfg.variant) {
    case StabVariant::S: return assemble_S(space_p, cfg);
    case StabVariant::S2: return assemble_S2(space_p, cfg);
    case StabVariant::Scip: return assemble_Scip(space_p, cfg);
    case StabVariant::None: break;
  }
  StabMatrix out;
  out.matrix.resize(space_p.n_dofs(), space_p.n_dofs());
  return out;
}

double stab_energy(const StabMatrix& mat, const Eigen::VectorXd& p) {
  require(p.size() == mat.matrix.rows(), ErrorCode::InvalidArgument, "coefficient vector size mismatch");
  return p.dot(mat.matrix * p);
}

std::vector<double> cellwise_S(const FeSpace& space_p, const StabConfig& cfg, const Eigen::VectorXd& p) {
  cfg.validate();
  const Mesh& m = space_p.mesh();
  const double H2 = m.H() * m.H();
  std::vector<double> out(static_cast<std::size_t>(m.n_cells()), 0.0);
  for (const Edge& e : m.edges()) {
    if (e.cls == EdgeClass::BoundaryExterior) continue;
    if (e.cls == EdgeClass::Regular && jump_skipped(e, cfg)) continue;
    const EdgeData d = edge_data(m, e);
    Eigen::VectorXd pl(static_cast<Eigen::Index>(d.dofs.size()));
    for (std::size_t i = 0; i < d.dofs.size(); ++i) pl[static_cast<Eigen::Index>(i)] = p[d.dofs[i]];
    if (e.cls == EdgeClass::Aniso) {
      const double mean = d.n_sides == 2 ? 0.5 : 1.0;
      for (int s = 0; s < d.n_sides; ++s)
        for (std::size_t q = 0; q < 2; ++q) {
          const Eigen::Vector2d g = d.G[static_cast<std::size_t>(s)][q].transpose() * pl;
          out[static_cast<std::size_t>(e.cells[static_cast<std::size_t>(s)])] +=
              cfg.gamma_aniso * H2 * mean * e.h_n[static_cast<std::size_t>(s)] * d.w[q] * g.squaredNorm();
        }
    } else {
      for (std::size_t q = 0; q < 2; ++q) {
        const Eigen::Vector2d j = (d.G[0][q] - d.G[1][q]).transpose() * pl;
        const double v = cfg.gamma_regular * H2 * e.mean_h_n() * d.w[q] * j.squaredNorm();
        out[static_cast<std::size_t>(e.cells[0])] += 0.5 * v;
        out[static_cast<std::size_t>(e.cells[1])] += 0.5 * v;
      }
    }
  }
  return out;
}

std::vector<double> tilde_h_min(const Mesh& m) {
  std::vector<double> h(static_cast<std::size_t>(m.n_cells()));
  for (Index c = 0; c < m.n_cells(); ++c)
    h[static_cast<std::size_t>(c)] = m.cell(c).region == Region::Aniso ? m.min_edge(c) : m.H();
  return h;
}

DgVectorField scaled_gradient(const FeSpace& space, const Eigen::VectorXd& p) {
  const Mesh& m = space.mesh();
  require(p.size() == space.n_dofs(), ErrorCode::InvalidArgument, "coefficient vector size mismatch");
  const auto h = tilde_h_min(m);
  DgVectorField f;
  f.values.resize(static_cast<std::size_t>(m.n_cells()));
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    const ElementMap map(m, c);
    const auto nodes = ref_element(cell.kind).nodes();
    const double h2 = h[static_cast<std::size_t>(c)] * h[static_cast<std::size_t>(c)];
    for (int k = 0; k < cell.n_vertices(); ++k) {
      const auto G = map.grad_shape(nodes[static_cast<std::size_t>(k)]);
      Vec2 g = Vec2::Zero();
      for (int j = 0; j < cell.n_vertices(); ++j) g += p[cell.v[static_cast<std::size_t>(j)]] * G[static_cast<std::size_t>(j)];
      f.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] = h2 * g;
    }
  }
  return f;
}

std::vector<Vec2> tau_h(const FeSpace& space, const DgVectorField& field) {
  const Mesh& m = space.mesh();
  require(static_cast<Index>(field.values.size()) == m.n_cells(), ErrorCode::InvalidArgument,
          "field does not match the mesh");
  const auto h = tilde_h_min(m);
  std::vector<Vec2> out(static_cast<std::size_t>(m.n_vertices()), Vec2::Zero());
  for (Index v = 0; v < m.n_vertices(); ++v) {
    if (m.on_boundary(v)) continue;
    Index best = -1;
    auto key = [&](Index c) {
      return std::make_tuple(h[static_cast<std::size_t>(c)], m.cell(c).region == Region::Aniso ? 0 : 1, c);
    };
    for (Index c : m.vertex_cells(v))
      if (best < 0 || key(c) < key(best)) best = c;
    const Cell& cell = m.cell(best);
    for (int k = 0; k < cell.n_vertices(); ++k)
      if (cell.v[static_cast<std::size_t>(k)] == v)
        out[static_cast<std::size_t>(v)] = field.values[static_cast<std::size_t>(best)][static_cast<std::size_t>(k)];
  }
  return out;
}

void write_edge_ledger_csv(const Mesh& m, const StabMatrix& mat, const Eigen::VectorXd& p, std::ostream& os) {
  os << "edge_id,class,h_n_1,h_n_2,h_tau,contribution\n";
  static constexpr const char* names[] = {"regular", "aniso", "boundary-exterior"};
  char buf[256];
  for (const EdgeContribution& c : mat.ledger) {
    const Edge& e = m.edge(c.edge);
    Eigen::VectorXd pl(static_cast<Eigen::Index>(c.dofs.size()));
    for (std::size_t i = 0; i < c.dofs.size(); ++i) pl[static_cast<Eigen::Index>(i)] = p[c.dofs[i]];
    std::snprintf(buf, sizeof buf, "%lld,%s,%.6g,%.6g,%.6g,%.6g\n", static_cast<long long>(c.edge),
                  names[static_cast<int>(e.cls)], e.h_n[0], e.h_n[1], e.h_tau(), pl.dot(c.local * pl));
    os << buf;
  }
}

}  // namespace anisostokes
