#include "anisostokes/spaces.hpp"

#include <algorithm>
#include <cmath>

namespace anisostokes {

namespace {

QuadratureRule make_gauss_1d(int n) {
  // Nodes/weights on [-1,1], mapped to [0,1].
  static const std::vector<std::vector<std::pair<double, double>>> table{
      {{0.0, 2.0}},
      {{-0.5773502691896257645, 1.0}, {0.5773502691896257645, 1.0}},
      {{-0.7745966692414833770, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {0.7745966692414833770, 5.0 / 9.0}},
      {{-0.8611363115940525752, 0.3478548451374538574},
       {-0.3399810435848562648, 0.6521451548625461426},
       {0.3399810435848562648, 0.6521451548625461426},
       {0.8611363115940525752, 0.3478548451374538574}},
  };
  QuadratureRule r;
  for (const auto& [x, w] : table[static_cast<std::size_t>(n - 1)]) {
    r.points.emplace_back(0.5 * (x + 1.0), 0.0);
    r.weights.push_back(0.5 * w);
  }
  return r;
}

QuadratureRule make_triangle(int degree) {
  QuadratureRule r;
  if (degree <= 2) {
    for (const Vec2& p : {Vec2(1.0 / 6, 1.0 / 6), Vec2(2.0 / 3, 1.0 / 6), Vec2(1.0 / 6, 2.0 / 3)}) {
      r.points.push_back(p);
      r.weights.push_back(1.0 / 6);
    }
    return r;
  }
  const double s = std::sqrt(15.0);
  const double a1 = (6.0 - s) / 21.0, b1 = (9.0 + 2.0 * s) / 21.0, w1 = (155.0 - s) / 2400.0;
  const double a2 = (6.0 + s) / 21.0, b2 = (9.0 - 2.0 * s) / 21.0, w2 = (155.0 + s) / 2400.0;
  r.points = {Vec2(1.0 / 3, 1.0 / 3), Vec2(a1, a1), Vec2(b1, a1), Vec2(a1, b1), Vec2(a2, a2), Vec2(b2, a2), Vec2(a2, b2)};
  r.weights = {9.0 / 80.0, w1, w1, w1, w2, w2, w2};
  return r;
}

QuadratureRule make_quad(int n) {
  const QuadratureRule& g = gauss_1d(n);
  QuadratureRule r;
  for (std::size_t j = 0; j < g.points.size(); ++j)
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      r.points.emplace_back(g.points[i].x(), g.points[j].x());
      r.weights.push_back(g.weights[i] * g.weights[j]);
    }
  return r;
}

const std::array<Vec2, 3> kTriNodes{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
const std::array<Vec2, 4> kQuadNodes{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};

}  // namespace

const QuadratureRule& gauss_1d(int n) {
  require(n >= 1 && n <= 4, ErrorCode::InvalidArgument, "Gauss rule supports 1..4 points");
  static const std::array<QuadratureRule, 4> rules{make_gauss_1d(1), make_gauss_1d(2), make_gauss_1d(3),
                                                   make_gauss_1d(4)};
  return rules[static_cast<std::size_t>(n - 1)];
}

const QuadratureRule& triangle_rule(int degree) {
  static const QuadratureRule low = make_triangle(2), high = make_triangle(5);
  require(degree == 2 || degree == 5, ErrorCode::InvalidArgument, "triangle rules: degree 2 or 5");
  return degree == 2 ? low : high;
}

const QuadratureRule& quad_rule(int n) {
  require(n >= 1 && n <= 4, ErrorCode::InvalidArgument, "quad rules: 1..4 points per direction");
  static const std::array<QuadratureRule, 4> rules{make_quad(1), make_quad(2), make_quad(3), make_quad(4)};
  return rules[static_cast<std::size_t>(n - 1)];
}

std::array<double, 4> RefElement::values(const Vec2& xi) const noexcept {
  const double s = xi.x(), t = xi.y();
  if (kind_ == CellKind::Triangle) return {1.0 - s - t, s, t, 0.0};
  return {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}

std::array<Vec2, 4> RefElement::gradients(const Vec2& xi) const noexcept {
  const double s = xi.x(), t = xi.y();
  if (kind_ == CellKind::Triangle) return {Vec2(-1, -1), Vec2(1, 0), Vec2(0, 1), Vec2(0, 0)};
  return {Vec2(-(1 - t), -(1 - s)), Vec2(1 - t, -s), Vec2(t, s), Vec2(-t, 1 - s)};
}

std::span<const Vec2> RefElement::nodes() const noexcept {
  if (kind_ == CellKind::Triangle) return kTriNodes;
  return kQuadNodes;
}

Vec2 RefElement::edge_point(int l, double t) const noexcept {
  const auto nd = nodes();
  const auto n = nd.size();
  const Vec2& a = nd[static_cast<std::size_t>(l)];
  const Vec2& b = nd[(static_cast<std::size_t>(l) + 1) % n];
  return a + t * (b - a);
}

const QuadratureRule& RefElement::stiffness_rule() const {
  return kind_ == CellKind::Triangle ? triangle_rule(2) : quad_rule(2);
}

const QuadratureRule& RefElement::accurate_rule() const {
  return kind_ == CellKind::Triangle ? triangle_rule(5) : quad_rule(4);
}

const RefElement& ref_element(CellKind kind) {
  static const RefElement tri(CellKind::Triangle), quad(CellKind::Quadrilateral);
  return kind == CellKind::Triangle ? tri : quad;
}

ElementMap::ElementMap(const Mesh& m, Index cell) : kind_(m.cell(cell).kind) {
  const Cell& c = m.cell(cell);
  for (int k = 0; k < c.n_vertices(); ++k) x_[static_cast<std::size_t>(k)] = m.vertex(c.v[static_cast<std::size_t>(k)]);
}

Vec2 ElementMap::map(const Vec2& xi) const noexcept {
  const auto N = ref_element(kind_).values(xi);
  Vec2 x = Vec2::Zero();
  for (int k = 0; k < ref_element(kind_).n_dofs(); ++k) x += N[static_cast<std::size_t>(k)] * x_[static_cast<std::size_t>(k)];
  return x;
}

Eigen::Matrix2d ElementMap::jacobian(const Vec2& xi) const noexcept {
  const auto dN = ref_element(kind_).gradients(xi);
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  for (int k = 0; k < ref_element(kind_).n_dofs(); ++k)
    J += x_[static_cast<std::size_t>(k)] * dN[static_cast<std::size_t>(k)].transpose();
  return J;
}

double ElementMap::det(const Vec2& xi) const {
  const double d = jacobian(xi).determinant();
  require(d > 0.0, ErrorCode::InvertedCell, "non-positive Jacobian determinant");
  return d;
}

std::array<Vec2, 4> ElementMap::grad_shape(const Vec2& xi) const {
  const Eigen::Matrix2d J = jacobian(xi);
  require(J.determinant() > 0.0, ErrorCode::InvertedCell, "non-positive Jacobian determinant");
  const Eigen::Matrix2d JinvT = J.inverse().transpose();
  auto g = ref_element(kind_).gradients(xi);
  for (auto& v : g) v = JinvT * v;
  return g;
}

std::optional<Vec2> ElementMap::inverse(const Vec2& x, double tol) const {
  Vec2 xi(1.0 / 3.0, 1.0 / 3.0);
  if (kind_ == CellKind::Triangle) {
    const Eigen::Matrix2d J = jacobian(xi);
    xi = J.partialPivLu().solve(x - x_[0]);
    if (xi.x() < -tol || xi.y() < -tol || xi.x() + xi.y() > 1.0 + tol) return std::nullopt;
    return xi;
  }
  xi = Vec2(0.5, 0.5);
  for (int it = 0; it < 30; ++it) {
    const Vec2 r = map(xi) - x;
    const Vec2 step = jacobian(xi).partialPivLu().solve(r);
    xi -= step;
    if (!xi.allFinite()) return std::nullopt;
    if (step.norm() < 1e-15) break;
  }
  if (xi.x() < -tol || xi.y() < -tol || xi.x() > 1.0 + tol || xi.y() > 1.0 + tol) return std::nullopt;
  return xi;
}

void cell_quadrature(const Mesh& m, Index cell, bool accurate, std::vector<QPoint>& out) {
  const RefElement& ref = ref_element(m.cell(cell).kind);
  const QuadratureRule& rule = accurate ? ref.accurate_rule() : ref.stiffness_rule();
  const ElementMap map(m, cell);
  out.resize(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2& xi = rule.points[q];
    QPoint& p = out[q];
    p.x = map.map(xi);
    p.JxW = map.det(xi) * rule.weights[q];
    p.phi = ref.values(xi);
    p.grad = map.grad_shape(xi);
  }
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, std::span<const int> dirichlet_tags)
    : mesh_(std::move(mesh)), tags_(dirichlet_tags.begin(), dirichlet_tags.end()) {
  require(mesh_ != nullptr, ErrorCode::InvalidArgument, "space without mesh");
  const Mesh& m = *mesh_;
  unsigned mask = 0;
  for (int t : tags_) {
    require(t > 0 && t < 32, ErrorCode::InvalidArgument, "boundary tag out of range");
    mask |= 1U << t;
  }
  dirichlet_.assign(static_cast<std::size_t>(m.n_vertices()), 0);
  for (Index v = 0; v < m.n_vertices(); ++v)
    if ((m.vertex_tags(v) & mask) != 0) {
      dirichlet_[static_cast<std::size_t>(v)] = 1;
      ++n_dirichlet_;
    }
  pure_dirichlet_ = true;
  for (const Edge& e : m.edges())
    if (e.is_boundary() && ((1U << e.tag) & mask) == 0) pure_dirichlet_ = false;

  // Buckets of roughly one cell each.
  const Box& b = m.bbox();
  nb_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.n_cells()) / 2.0)));
  bx0_ = b.xmin;
  by0_ = b.ymin;
  bdx_ = (b.xmax - b.xmin) / nb_;
  bdy_ = (b.ymax - b.ymin) / nb_;
  const auto nbk = static_cast<std::size_t>(nb_) * static_cast<std::size_t>(nb_);
  std::vector<std::vector<Index>> lists(nbk);
  auto clampi = [this](double v) { return std::clamp(static_cast<int>(std::floor(v)), 0, nb_ - 1); };
  for (Index c = 0; c < m.n_cells(); ++c) {
    const Cell& cell = m.cell(c);
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int k = 0; k < cell.n_vertices(); ++k) {
      const Vec2& p = m.vertex(cell.v[static_cast<std::size_t>(k)]);
      x0 = std::min(x0, p.x());
      x1 = std::max(x1, p.x());
      y0 = std::min(y0, p.y());
      y1 = std::max(y1, p.y());
    }
    const double pad = 1e-12 * m.H();
    for (int J = clampi((y0 - pad - by0_) / bdy_); J <= clampi((y1 + pad - by0_) / bdy_); ++J)
      for (int I = clampi((x0 - pad - bx0_) / bdx_); I <= clampi((x1 + pad - bx0_) / bdx_); ++I)
        lists[static_cast<std::size_t>(J) * static_cast<std::size_t>(nb_) + static_cast<std::size_t>(I)].push_back(c);
  }
  bucket_offsets_.assign(nbk + 1, 0);
  for (std::size_t k = 0; k < nbk; ++k)
    bucket_offsets_[k + 1] = bucket_offsets_[k] + static_cast<Index>(lists[k].size());
  bucket_cells_.reserve(static_cast<std::size_t>(bucket_offsets_.back()));
  for (const auto& l : lists) bucket_cells_.insert(bucket_cells_.end(), l.begin(), l.end());
}

std::optional<std::pair<Index, Vec2>> FeSpace::locate(const Vec2& x) const {
  const double fx = (x.x() - bx0_) / bdx_, fy = (x.y() - by0_) / bdy_;
  if (!(fx >= -1e-9 && fy >= -1e-9 && fx <= nb_ + 1e-9 && fy <= nb_ + 1e-9)) return std::nullopt;
  const int I = std::clamp(static_cast<int>(std::floor(fx)), 0, nb_ - 1);
  const int J = std::clamp(static_cast<int>(std::floor(fy)), 0, nb_ - 1);
  const auto k = static_cast<std::size_t>(J) * static_cast<std::size_t>(nb_) + static_cast<std::size_t>(I);
  for (Index p = bucket_offsets_[k]; p < bucket_offsets_[k + 1]; ++p) {
    const Index c = bucket_cells_[static_cast<std::size_t>(p)];
    if (auto xi = ElementMap(*mesh_, c).inverse(x)) return std::make_pair(c, *xi);
  }
  return std::nullopt;
}

FeSpace build_space(std::shared_ptr<const Mesh> mesh, std::span<const int> dirichlet_tags) {
  return FeSpace(std::move(mesh), dirichlet_tags);
}

PointValue evaluate(const FeSpace& space, std::span<const double> coeffs, const Vec2& x) {
  require(static_cast<Index>(coeffs.size()) == space.n_dofs(), ErrorCode::InvalidArgument,
          "coefficient vector does not match the space");
  const auto hit = space.locate(x);
  require(hit.has_value(), ErrorCode::OutOfDomain, "point outside the meshed domain");
  const auto& [c, xi] = *hit;
  const Cell& cell = space.mesh().cell(c);
  const ElementMap map(space.mesh(), c);
  const auto N = ref_element(cell.kind).values(xi);
  const auto G = map.grad_shape(xi);
  PointValue out;
  for (int k = 0; k < cell.n_vertices(); ++k) {
    const double u = coeffs[static_cast<std::size_t>(cell.v[static_cast<std::size_t>(k)])];
    out.value += u * N[static_cast<std::size_t>(k)];
    out.gradient += u * G[static_cast<std::size_t>(k)];
  }
  return out;
}

Eigen::VectorXd interpolate(const FeSpace& space, const ScalarFn& f) {
  Eigen::VectorXd u(space.n_dofs());
  for (Index i = 0; i < space.n_dofs(); ++i) u[i] = f(space.dof_point(i));
  return u;
}

}  // namespace anisostokes
