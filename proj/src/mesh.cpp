#include "anisostokes/mesh.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>

namespace anisostokes {

namespace {

constexpr std::array<int, 4> kCornerNode{0, 2, 8, 6};
constexpr std::array<int, 4> kEdgeSlot{1, 5, 7, 3};

int sign_of(double v) noexcept { return (v > 0.0) - (v < 0.0); }

// Dihedral map of local node ids: optional reflection (a,b)->(b,a), then k quarter turns (a,b)->(2-b,a).
struct Frame {
  int turns = 0;
  bool reflect = false;
  [[nodiscard]] int operator()(int node) const noexcept {
    int a = node % 3, b = node / 3;
    if (reflect) std::swap(a, b);
    for (int k = 0; k < turns; ++k) {
      const int na = 2 - b;
      b = a;
      a = na;
    }
    return b * 3 + a;
  }
};

// Finds t in (0,1) with phi(a + t (b - a)) = 0, given a sign change.
double edge_root(const ImplicitBoundary& phi, const Vec2& a, const Vec2& b) {
  auto f = [&](double t) { return phi(a + t * (b - a)); };
  const double fa = f(0.0), fb = f(1.0);
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      f, 0.0, 1.0, fa, fb, boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2),
      iters);
  return 0.5 * (lo + hi);
}

double max_angle_of(const std::array<Vec2, 9>& x, std::initializer_list<int> ids) {
  std::array<Vec2, 4> p;
  std::size_t n = 0;
  for (int id : ids) p[n++] = x[static_cast<std::size_t>(id)];
  return max_interior_angle(std::span<const Vec2>(p.data(), n));
}

Cell tri(int a, int b, int c) {
  Cell t;
  t.kind = CellKind::Triangle;
  t.v = {a, b, c, -1};
  return t;
}

Cell quad(int a, int b, int c, int d) {
  Cell q;
  q.kind = CellKind::Quadrilateral;
  q.v = {a, b, c, d};
  return q;
}

// Splits quad (a,b,c,d) along the diagonal giving the smaller maximum angle.
void split_quad(const std::array<Vec2, 9>& x, std::array<int, 4> q, bool prefer_bd, std::vector<Cell>& out) {
  const auto [a, b, c, d] = q;
  const double m_ac = std::max(max_angle_of(x, {a, b, c}), max_angle_of(x, {a, c, d}));
  const double m_bd = std::max(max_angle_of(x, {a, b, d}), max_angle_of(x, {b, c, d}));
  constexpr double tie = 1e-12;
  const bool use_ac = prefer_bd ? (m_ac < m_bd - tie) : (m_ac <= m_bd + tie);
  if (use_ac) {
    out.push_back(tri(a, b, c));
    out.push_back(tri(a, c, d));
  } else {
    out.push_back(tri(a, b, d));
    out.push_back(tri(b, c, d));
  }
}

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

PatchMesh::PatchMesh(int nx, int ny, const Box& bbox) : nx_(nx), ny_(ny), bbox_(bbox) {
  require(nx >= 1 && ny >= 1, ErrorCode::InvalidArgument, "patch counts must be >= 1");
  require(std::isfinite(bbox.xmin) && std::isfinite(bbox.xmax) && std::isfinite(bbox.ymin) &&
              std::isfinite(bbox.ymax) && bbox.xmax > bbox.xmin && bbox.ymax > bbox.ymin,
          ErrorCode::InvalidArgument, "degenerate bounding box");
}

Vec2 PatchMesh::lattice_point(int I, int J) const noexcept {
  const double x = I == 2 * nx_ ? bbox_.xmax : bbox_.xmin + 0.5 * I * dx();
  const double y = J == 2 * ny_ ? bbox_.ymax : bbox_.ymin + 0.5 * J * dy();
  return {x, y};
}

std::array<Vec2, 9> PatchMesh::patch_nodes(int i, int j) const noexcept {
  std::array<Vec2, 9> x;
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a) x[static_cast<std::size_t>(b * 3 + a)] = lattice_point(2 * i + a, 2 * j + b);
  return x;
}

ImplicitBoundary ImplicitBoundary::circle_hole(const Vec2& centre, double radius) {
  require(radius > 0.0, ErrorCode::InvalidArgument, "circle radius must be positive");
  return ImplicitBoundary([centre, radius](const Vec2& x) { return radius - (x - centre).norm(); });
}

ImplicitBoundary ImplicitBoundary::half_plane(double a, double b, double c) {
  return ImplicitBoundary([a, b, c](const Vec2& x) { return a * x.x() + b * x.y() - c; });
}

ImplicitBoundary ImplicitBoundary::none() {
  return ImplicitBoundary([](const Vec2&) { return -1.0; });
}

int CutPattern::n_crossed() const noexcept {
  return static_cast<int>(std::count_if(edge_param.begin(), edge_param.end(), [](double t) { return t >= 0.0; }));
}

int CutPattern::n_zero() const noexcept {
  return static_cast<int>(std::count(corner_sign.begin(), corner_sign.end(), 0));
}

double signed_area(std::span<const Vec2> poly) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    s += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * s;
}

double max_interior_angle(std::span<const Vec2> poly) noexcept {
  double m = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 u = poly[(i + n - 1) % n] - poly[i];
    const Vec2 w = poly[(i + 1) % n] - poly[i];
    const double c = std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0);
    m = std::max(m, std::acos(c));
  }
  return m * 180.0 / std::numbers::pi;
}

CutPattern classify_cut(const std::array<int, 4>& corner_sign, const std::array<double, 4>& edge_param) {
  CutPattern p;
  p.corner_sign = corner_sign;
  p.edge_param = edge_param;
  const int ne = p.n_crossed();
  const int nz = p.n_zero();
  for (int k = 0; k < 4; ++k) {
    if (edge_param[static_cast<std::size_t>(k)] < 0.0) continue;
    const int s0 = corner_sign[static_cast<std::size_t>(k)];
    const int s1 = corner_sign[static_cast<std::size_t>((k + 1) % 4)];
    require(s0 * s1 < 0 && edge_param[static_cast<std::size_t>(k)] < 1.0, ErrorCode::InternalError,
            "crossed edge without sign change");
  }
  if (nz == 4) fail(ErrorCode::UnsupportedCut, "patch lies entirely on the boundary");
  if (nz == 0) {
    if (ne == 0) return p;
    if (ne == 2) {
      p.kind = (edge_param[0] >= 0.0) == (edge_param[2] >= 0.0) ? CutKind::OppositeEdges : CutKind::AdjacentEdges;
      return p;
    }
    fail(ErrorCode::UnsupportedCut, "patch cut on " + std::to_string(ne) + " edges");
  }
  if (nz == 1) {
    if (ne == 0) return p;  // grazing a vertex
    if (ne == 1) {
      p.kind = CutKind::VertexEdge;
      return p;
    }
    fail(ErrorCode::UnsupportedCut, "patch cut through a vertex and " + std::to_string(ne) + " edges");
  }
  if (ne > 0) fail(ErrorCode::UnsupportedCut, "patch cut through two vertices and an edge");
  if (nz == 2 && corner_sign[0] == 0 && corner_sign[2] == 0 && corner_sign[1] * corner_sign[3] < 0) {
    p.kind = CutKind::Diagonal;
  } else if (nz == 2 && corner_sign[1] == 0 && corner_sign[3] == 0 && corner_sign[0] * corner_sign[2] < 0) {
    p.kind = CutKind::Diagonal;
  }
  return p;
}

CutPattern cut_patch(const PatchMesh& pm, int i, int j, const ImplicitBoundary& boundary, double snap_tol) {
  require(i >= 0 && j >= 0 && i < pm.nx() && j < pm.ny(), ErrorCode::InvalidArgument, "patch index out of range");
  require(snap_tol >= 0.0 && snap_tol < 0.5, ErrorCode::InvalidArgument, "snap_tol must lie in [0, 0.5)");
  const auto x = pm.patch_nodes(i, j);
  std::array<Vec2, 4> c;
  std::array<int, 4> s{};
  for (std::size_t k = 0; k < 4; ++k) {
    c[k] = x[static_cast<std::size_t>(kCornerNode[k])];
    s[k] = sign_of(boundary(c[k]));
  }
  const double H = pm.H();
  std::array<double, 4> t{-1, -1, -1, -1};
  std::array<int, 4> snapped = s;
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t k1 = (k + 1) % 4;
    const double len = (c[k1] - c[k]).norm();
    if (s[k] * s[k1] < 0) {
      t[k] = edge_root(boundary, c[k], c[k1]);
      if (t[k] * len <= snap_tol * H) snapped[k] = 0;
      if ((1.0 - t[k]) * len <= snap_tol * H) snapped[k1] = 0;
    } else if (s[k] != 0 && s[k] == s[k1] && sign_of(boundary(0.5 * (c[k] + c[k1]))) == -s[k]) {
      fail(ErrorCode::UnsupportedCut, "patch edge crossed twice");
    }
  }
  for (std::size_t k = 0; k < 4; ++k)
    if (snapped[k] * snapped[(k + 1) % 4] >= 0) t[k] = -1.0;
  return classify_cut(snapped, t);
}

PatchSubdivision subdivide_patch(const std::array<Vec2, 4>& corners, const CutPattern& pattern) {
  PatchSubdivision out;
  auto& x = out.nodes;
  // Bilinear lattice of the patch.
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a) {
      const double u = 0.5 * a, w = 0.5 * b;
      x[static_cast<std::size_t>(b * 3 + a)] = (1 - u) * (1 - w) * corners[0] + u * (1 - w) * corners[1] +
                                               u * w * corners[2] + (1 - u) * w * corners[3];
    }
  const auto& cs = pattern.corner_sign;
  auto& side = out.side;
  for (std::size_t k = 0; k < 4; ++k) {
    side[static_cast<std::size_t>(kCornerNode[k])] = cs[k];
    const std::size_t k1 = (k + 1) % 4;
    const double t = pattern.edge_param[k];
    const auto slot = static_cast<std::size_t>(kEdgeSlot[k]);
    if (t >= 0.0) {
      require(t > 0.0 && t < 1.0, ErrorCode::DegenerateCell, "cut parameter on a patch vertex without snapping");
      x[slot] = corners[k] + t * (corners[k1] - corners[k]);
      side[slot] = 0;
    } else {
      side[slot] = cs[k] != 0 ? cs[k] : cs[k1];
    }
  }
  int any_sign = 0;
  for (int s : cs) any_sign = any_sign != 0 ? any_sign : s;
  side[4] = any_sign;

  std::vector<Cell>& cells = out.cells;
  Frame f;
  auto map = [&f](std::array<int, 4> q) {
    for (int& v : q) v = f(v);
    return q;
  };
  switch (pattern.kind) {
    case CutKind::None:
      cells = {quad(0, 1, 4, 3), quad(1, 2, 5, 4), quad(3, 4, 7, 6), quad(4, 5, 8, 7)};
      break;
    case CutKind::OppositeEdges: {
      f.turns = pattern.edge_param[0] >= 0.0 ? 0 : 1;
      x[4] = 0.5 * (x[static_cast<std::size_t>(f(1))] + x[static_cast<std::size_t>(f(7))]);
      side[4] = 0;
      for (const auto& q : {std::array{0, 1, 4, 3}, std::array{1, 2, 5, 4}, std::array{3, 4, 7, 6},
                            std::array{4, 5, 8, 7}})
        split_quad(x, map(q), false, cells);
      break;
    }
    case CutKind::AdjacentEdges: {
      for (int k = 0; k < 4; ++k)
        if (pattern.edge_param[static_cast<std::size_t>(k)] >= 0.0 &&
            pattern.edge_param[static_cast<std::size_t>((k + 1) % 4)] >= 0.0)
          f.turns = k;
      // Interior node halfway from the centre towards the corner opposite the cut corner.
      const Vec2 centre = 0.25 * (corners[0] + corners[1] + corners[2] + corners[3]);
      const auto far = static_cast<std::size_t>(f(6));
      x[4] = centre + 0.5 * (x[far] - centre);
      side[4] = side[far];
      auto t = [&](int a, int b, int c) { return tri(f(a), f(b), f(c)); };
      cells.push_back(t(1, 2, 5));
      constexpr std::array<int, 7> ring{0, 1, 5, 8, 7, 6, 3};
      for (std::size_t k = 0; k < ring.size(); ++k) cells.push_back(t(4, ring[k], ring[(k + 1) % ring.size()]));
      break;
    }
    case CutKind::VertexEdge: {
      int z = 0;
      while (cs[static_cast<std::size_t>(z)] != 0) ++z;
      f.turns = z;
      f.reflect = pattern.edge_param[static_cast<std::size_t>((z + 2) % 4)] < 0.0;
      x[4] = 0.5 * (x[static_cast<std::size_t>(f(0))] + x[static_cast<std::size_t>(f(7))]);
      side[4] = 0;
      auto lb = map({0, 1, 4, 3});
      cells.push_back(tri(lb[0], lb[1], lb[2]));
      cells.push_back(tri(lb[0], lb[2], lb[3]));
      for (const auto& q : {std::array{1, 2, 5, 4}, std::array{3, 4, 7, 6}, std::array{4, 5, 8, 7}})
        split_quad(x, map(q), false, cells);
      break;
    }
    case CutKind::Diagonal: {
      f.turns = cs[0] == 0 ? 0 : 1;
      x[4] = 0.5 * (x[static_cast<std::size_t>(f(0))] + x[static_cast<std::size_t>(f(8))]);
      side[4] = 0;
      auto lb = map({0, 1, 4, 3});
      cells.push_back(tri(lb[0], lb[1], lb[2]));
      cells.push_back(tri(lb[0], lb[2], lb[3]));
      auto rt = map({4, 5, 8, 7});
      cells.push_back(tri(rt[0], rt[1], rt[2]));
      cells.push_back(tri(rt[0], rt[2], rt[3]));
      split_quad(x, map({3, 4, 7, 6}), true, cells);
      split_quad(x, map({1, 2, 5, 4}), true, cells);
      break;
    }
  }

  const double patch_area = std::abs(signed_area(corners));
  const Region region = pattern.kind == CutKind::None ? Region::Regular : Region::Aniso;
  out.cell_side.reserve(cells.size());
  for (Cell& c : cells) {
    c.region = region;
    const int n = c.n_vertices();
    std::array<Vec2, 4> p;
    for (int k = 0; k < n; ++k) p[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(c.v[static_cast<std::size_t>(k)])];
    double a = signed_area(std::span<const Vec2>(p.data(), static_cast<std::size_t>(n)));
    if (a < 0.0) {
      std::reverse(c.v.begin(), c.v.begin() + n);
      a = -a;
    }
    require(a > 1e-15 * patch_area, ErrorCode::DegenerateCell, "zero-area cell in patch subdivision");
    int s = 0;
    for (int k = 0; k < n; ++k) {
      const int l = side[static_cast<std::size_t>(c.v[static_cast<std::size_t>(k)])];
      if (l == 0) continue;
      require(s == 0 || s == l, ErrorCode::InternalError, "cell straddles the discrete boundary");
      s = l;
    }
    out.cell_side.push_back(s);
  }
  return out;
}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Cell> cells, double H, const Box& bbox)
    : cells_(std::move(cells)), H_(H), bbox_(bbox) {
  require(H > 0.0, ErrorCode::InvalidArgument, "mesh size H must be positive");
  require(!cells_.empty(), ErrorCode::InvalidArgument, "mesh without cells");
  const auto nv_in = static_cast<Index>(vertices.size());
  std::vector<Index> remap(vertices.size(), -1);
  for (const Cell& c : cells_)
    for (int k = 0; k < c.n_vertices(); ++k) {
      const Index v = c.v[static_cast<std::size_t>(k)];
      require(v >= 0 && v < nv_in, ErrorCode::InvalidArgument, "cell vertex index out of range");
      remap[static_cast<std::size_t>(v)] = 0;
    }
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (remap[i] == 0) {
      remap[i] = static_cast<Index>(vertices_.size());
      vertices_.push_back(vertices[i]);
    }
  for (Cell& c : cells_)
    for (int k = 0; k < c.n_vertices(); ++k) c.v[static_cast<std::size_t>(k)] = remap[static_cast<std::size_t>(c.v[static_cast<std::size_t>(k)])];

  const std::size_t nc = cells_.size();
  area_.resize(nc);
  cell_edges_.assign(4 * nc, -1);
  std::unordered_map<std::uint64_t, Index> lookup;
  lookup.reserve(4 * nc);
  for (std::size_t ci = 0; ci < nc; ++ci) {
    const Cell& c = cells_[ci];
    const int n = c.n_vertices();
    std::array<Vec2, 4> p;
    for (int k = 0; k < n; ++k) p[static_cast<std::size_t>(k)] = vertex(c.v[static_cast<std::size_t>(k)]);
    const double a = signed_area(std::span<const Vec2>(p.data(), static_cast<std::size_t>(n)));
    require(a != 0.0, ErrorCode::DegenerateCell, "zero-area cell " + std::to_string(ci));
    require(a > 0.0, ErrorCode::InvertedCell, "clockwise cell " + std::to_string(ci));
    area_[ci] = a;
    (c.region == Region::Aniso ? area_aniso_ : area_regular_) += a;
    for (int k = 0; k < n; ++k) {
      const Index va = c.v[static_cast<std::size_t>(k)];
      const Index vb = c.v[static_cast<std::size_t>((k + 1) % n)];
      auto [it, fresh] = lookup.try_emplace(edge_key(va, vb), static_cast<Index>(edges_.size()));
      if (fresh) {
        Edge e;
        e.v = {va, vb};
        e.cells[0] = static_cast<Index>(ci);
        e.local[0] = k;
        edges_.push_back(e);
      } else {
        Edge& e = edges_[static_cast<std::size_t>(it->second)];
        require(e.cells[1] < 0, ErrorCode::InternalError, "edge shared by more than two cells");
        e.cells[1] = static_cast<Index>(ci);
        e.local[1] = k;
      }
      cell_edges_[4 * ci + static_cast<std::size_t>(k)] = it->second;
    }
  }

  const double tol = 1e-10 * H_;
  auto side_tag = [&](const Vec2& a, const Vec2& b) {
    if (std::abs(a.x() - bbox_.xmin) <= tol && std::abs(b.x() - bbox_.xmin) <= tol) return int{kLeft};
    if (std::abs(a.x() - bbox_.xmax) <= tol && std::abs(b.x() - bbox_.xmax) <= tol) return int{kRight};
    if (std::abs(a.y() - bbox_.ymin) <= tol && std::abs(b.y() - bbox_.ymin) <= tol) return int{kBottom};
    if (std::abs(a.y() - bbox_.ymax) <= tol && std::abs(b.y() - bbox_.ymax) <= tol) return int{kTop};
    return int{kInterface};
  };
  vtags_.assign(vertices_.size(), 0U);
  for (Edge& e : edges_) {
    e.length = (vertex(e.v[1]) - vertex(e.v[0])).norm();
    for (int s = 0; s < 2; ++s)
      if (e.cells[static_cast<std::size_t>(s)] >= 0)
        e.h_n[static_cast<std::size_t>(s)] = cell_area(e.cells[static_cast<std::size_t>(s)]) / e.length;
    const bool aniso0 = cell(e.cells[0]).region == Region::Aniso;
    if (e.is_boundary()) {
      e.tag = side_tag(vertex(e.v[0]), vertex(e.v[1]));
      e.outer_patch = e.tag != kInterface;
      e.cls = aniso0 ? EdgeClass::Aniso : EdgeClass::BoundaryExterior;
      for (Index v : e.v) vtags_[static_cast<std::size_t>(v)] |= 1U << e.tag;
    } else {
      const bool aniso1 = cell(e.cells[1]).region == Region::Aniso;
      e.cls = (aniso0 || aniso1) ? EdgeClass::Aniso : EdgeClass::Regular;
      e.outer_patch = cell(e.cells[0]).patch != cell(e.cells[1]).patch;
    }
  }

  vc_offsets_.assign(vertices_.size() + 1, 0);
  for (const Cell& c : cells_)
    for (int k = 0; k < c.n_vertices(); ++k) ++vc_offsets_[static_cast<std::size_t>(c.v[static_cast<std::size_t>(k)]) + 1];
  for (std::size_t i = 0; i < vertices_.size(); ++i) vc_offsets_[i + 1] += vc_offsets_[i];
  vc_cells_.resize(static_cast<std::size_t>(vc_offsets_.back()));
  std::vector<Index> fill(vc_offsets_.begin(), vc_offsets_.end() - 1);
  for (std::size_t ci = 0; ci < nc; ++ci) {
    const Cell& c = cells_[ci];
    for (int k = 0; k < c.n_vertices(); ++k)
      vc_cells_[static_cast<std::size_t>(fill[static_cast<std::size_t>(c.v[static_cast<std::size_t>(k)])]++)] = static_cast<Index>(ci);
  }
}

double Mesh::min_edge(Index c) const {
  double m = std::numeric_limits<double>::infinity();
  for (Index e : cell_edges(c)) m = std::min(m, edge(e).length);
  return m;
}

double Mesh::max_edge(Index c) const {
  double m = 0.0;
  for (Index e : cell_edges(c)) m = std::max(m, edge(e).length);
  return m;
}

Mesh build_lmfem_mesh(const PatchMesh& pm, const ImplicitBoundary& boundary, double snap_tol) {
  require(snap_tol >= 0.0 && snap_tol < 0.5, ErrorCode::InvalidArgument, "snap_tol must lie in [0, 0.5)");
  const int nx = pm.nx(), ny = pm.ny();
  const int LX = 2 * nx + 1, LY = 2 * ny + 1;
  const double H = pm.H();
  auto lat = [LX](int I, int J) { return static_cast<std::size_t>(J) * static_cast<std::size_t>(LX) + static_cast<std::size_t>(I); };
  auto pv = [nx](int i, int j) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx + 1) + static_cast<std::size_t>(i); };

  std::vector<Vec2> X(static_cast<std::size_t>(LX) * static_cast<std::size_t>(LY));
  for (int J = 0; J < LY; ++J)
    for (int I = 0; I < LX; ++I) X[lat(I, J)] = pm.lattice_point(I, J);

  std::vector<int> status(static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) status[pv(i, j)] = sign_of(boundary(X[lat(2 * i, 2 * j)]));

  // Grid edges: horizontal (i,j)-(i+1,j) and vertical (i,j)-(i,j+1); parameter runs in +x / +y.
  struct GridEdge {
    std::size_t a, b, slot;
    double t = -1.0;
  };
  std::vector<GridEdge> hor, ver;
  hor.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny + 1));
  ver.reserve(static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) hor.push_back({pv(i, j), pv(i + 1, j), lat(2 * i + 1, 2 * j)});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) ver.push_back({pv(i, j), pv(i, j + 1), lat(2 * i, 2 * j + 1)});

  auto corner_pos = [&](std::size_t p) {
    const int i = static_cast<int>(p % static_cast<std::size_t>(nx + 1));
    const int j = static_cast<int>(p / static_cast<std::size_t>(nx + 1));
    return X[lat(2 * i, 2 * j)];
  };
  std::vector<int> snapped = status;
  for (auto* list : {&hor, &ver})
    for (GridEdge& g : *list) {
      const int sa = status[g.a], sb = status[g.b];
      const Vec2 A = corner_pos(g.a), B = corner_pos(g.b);
      if (sa * sb < 0) {
        g.t = edge_root(boundary, A, B);
        const double len = (B - A).norm();
        if (g.t * len <= snap_tol * H) snapped[g.a] = 0;
        if ((1.0 - g.t) * len <= snap_tol * H) snapped[g.b] = 0;
      } else if (sa != 0 && sa == sb && sign_of(boundary(X[g.slot])) == -sa) {
        fail(ErrorCode::UnsupportedCut, "patch edge crossed twice");
      }
    }
  for (auto* list : {&hor, &ver})
    for (GridEdge& g : *list) {
      if (snapped[g.a] * snapped[g.b] >= 0) {
        g.t = -1.0;
      } else {
        X[g.slot] = corner_pos(g.a) + g.t * (corner_pos(g.b) - corner_pos(g.a));
      }
    }

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(8) * static_cast<std::size_t>(pm.n_patches()));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::array<std::size_t, 4> pc{pv(i, j), pv(i + 1, j), pv(i + 1, j + 1), pv(i, j + 1)};
      std::array<int, 4> cs{};
      std::array<Vec2, 4> corners;
      for (std::size_t k = 0; k < 4; ++k) {
        cs[k] = snapped[pc[k]];
        corners[k] = corner_pos(pc[k]);
      }
      const double tb = hor[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)].t;
      const double tt = hor[static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)].t;
      const double tl = ver[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx + 1) + static_cast<std::size_t>(i)].t;
      const double tr = ver[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx + 1) + static_cast<std::size_t>(i + 1)].t;
      const std::array<double, 4> ep{tb, tr, tt >= 0.0 ? 1.0 - tt : -1.0, tl >= 0.0 ? 1.0 - tl : -1.0};
      CutPattern pat = classify_cut(cs, ep);
      PatchSubdivision sub = subdivide_patch(corners, pat);
      const Index patch = Index{j} * nx + i;
      auto global = [&](Index local) {
        return static_cast<Index>(lat(2 * i + static_cast<int>(local % 3), 2 * j + static_cast<int>(local / 3)));
      };
      X[lat(2 * i + 1, 2 * j + 1)] = sub.nodes[4];
      for (std::size_t c = 0; c < sub.cells.size(); ++c) {
        if (sub.cell_side[c] > 0) continue;
        Cell cell = sub.cells[c];
        cell.patch = patch;
        for (int k = 0; k < cell.n_vertices(); ++k) cell.v[static_cast<std::size_t>(k)] = global(cell.v[static_cast<std::size_t>(k)]);
        cells.push_back(cell);
      }
    }
  require(!cells.empty(), ErrorCode::InvalidArgument, "no fluid cells inside the bounding box");
  return Mesh(std::move(X), std::move(cells), H, pm.bbox());
}

Mesh build_alternating_mesh(int n_coarse, double ratio, const Box& bbox, bool all_aniso) {
  require(n_coarse >= 1, ErrorCode::InvalidArgument, "n_coarse must be >= 1");
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::InvalidArgument, "ratio must lie in (0,1)");
  const PatchMesh pm(n_coarse, n_coarse, bbox);
  const int L = 2 * n_coarse + 1;
  std::vector<double> ys(static_cast<std::size_t>(L));
  for (int j = 0; j < n_coarse; ++j) {
    const double y0 = bbox.ymin + j * pm.dy();
    ys[static_cast<std::size_t>(2 * j)] = y0;
    ys[static_cast<std::size_t>(2 * j + 1)] = y0 + ratio * pm.dy();
  }
  ys.back() = bbox.ymax;
  std::vector<Vec2> X;
  X.reserve(static_cast<std::size_t>(L) * static_cast<std::size_t>(L));
  for (int J = 0; J < L; ++J)
    for (int I = 0; I < L; ++I) X.emplace_back(pm.lattice_point(I, 0).x(), ys[static_cast<std::size_t>(J)]);
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(L - 1) * static_cast<std::size_t>(L - 1));
  for (int J = 0; J + 1 < L; ++J)
    for (int I = 0; I + 1 < L; ++I) {
      Cell c = quad(J * L + I, J * L + I + 1, (J + 1) * L + I + 1, (J + 1) * L + I);
      c.region = all_aniso ? Region::Aniso : Region::Regular;
      c.patch = Index{J / 2} * n_coarse + I / 2;
      cells.push_back(c);
    }
  return Mesh(std::move(X), std::move(cells), pm.H(), bbox);
}

QualityReport mesh_quality_report(const Mesh& m) {
  QualityReport q;
  q.K_min = std::numeric_limits<double>::infinity();
  q.e_min = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < m.n_cells(); ++c) {
    const double a = m.cell_area(c);
    q.K_max = std::max(q.K_max, a);
    q.K_min = std::min(q.K_min, a);
    q.kappa_max = std::max(q.kappa_max, m.max_edge(c) / m.min_edge(c));
    const Cell& cell = m.cell(c);
    std::array<Vec2, 4> p;
    for (int k = 0; k < cell.n_vertices(); ++k) p[static_cast<std::size_t>(k)] = m.vertex(cell.v[static_cast<std::size_t>(k)]);
    q.angle_max = std::max(q.angle_max, max_interior_angle(std::span<const Vec2>(p.data(), static_cast<std::size_t>(cell.n_vertices()))));
  }
  for (const Edge& e : m.edges()) {
    q.e_max = std::max(q.e_max, e.length);
    q.e_min = std::min(q.e_min, e.length);
  }
  q.ratio = q.K_max / q.K_min;
  return q;
}

void write_vtk_mesh(const Mesh& m, std::ostream& os) {
  os << "# vtk DataFile Version 3.0\nanisostokes mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os.precision(17);
  os << "POINTS " << m.n_vertices() << " double\n";
  for (const Vec2& x : m.vertices()) os << x.x() << ' ' << x.y() << " 0\n";
  Index size = 0;
  for (const Cell& c : m.cells()) size += c.n_vertices() + 1;
  os << "CELLS " << m.n_cells() << ' ' << size << '\n';
  for (const Cell& c : m.cells()) {
    os << c.n_vertices();
    for (int k = 0; k < c.n_vertices(); ++k) os << ' ' << c.v[static_cast<std::size_t>(k)];
    os << '\n';
  }
  os << "CELL_TYPES " << m.n_cells() << '\n';
  for (const Cell& c : m.cells()) os << (c.kind == CellKind::Triangle ? 5 : 9) << '\n';
  os << "CELL_DATA " << m.n_cells() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (const Cell& c : m.cells()) os << static_cast<int>(c.region) << '\n';
  os << "SCALARS aspect_ratio double 1\nLOOKUP_TABLE default\n";
  for (Index c = 0; c < m.n_cells(); ++c) os << m.max_edge(c) / m.min_edge(c) << '\n';
}

}  // namespace anisostokes
