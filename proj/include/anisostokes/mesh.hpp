#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "anisostokes/error.hpp"

namespace anisostokes {

using Index = std::int64_t;
using Vec2 = Eigen::Vector2d;

struct Box {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;
};

enum BoundaryTag : int {
  kInterior = 0,
  kLeft = 1,
  kRight = 2,
  kBottom = 3,
  kTop = 4,
  kInterface = 5,
};

// Coarse tensor grid of congruent patches.
class PatchMesh {
 public:
  PatchMesh(int nx, int ny, const Box& bbox);

  [[nodiscard]] int nx() const noexcept { return nx_; }
  [[nodiscard]] int ny() const noexcept { return ny_; }
  [[nodiscard]] const Box& bbox() const noexcept { return bbox_; }
  [[nodiscard]] double dx() const noexcept { return (bbox_.xmax - bbox_.xmin) / nx_; }
  [[nodiscard]] double dy() const noexcept { return (bbox_.ymax - bbox_.ymin) / ny_; }
  [[nodiscard]] double H() const noexcept { return std::max(dx(), dy()); }
  [[nodiscard]] Index n_patches() const noexcept { return Index{nx_} * ny_; }
  // Lattice of patch nodes: (2nx+1) x (2ny+1), I along x.
  [[nodiscard]] Vec2 lattice_point(int I, int J) const noexcept;
  // Local nodes of patch (i,j), numbered b*3+a for a,b in {0,1,2}.
  [[nodiscard]] std::array<Vec2, 9> patch_nodes(int i, int j) const noexcept;

 private:
  int nx_, ny_;
  Box bbox_;
};

// Level set: negative inside the fluid domain.
class ImplicitBoundary {
 public:
  using Fn = std::function<double(const Vec2&)>;
  explicit ImplicitBoundary(Fn phi, int tag = kInterface) : phi_(std::move(phi)), tag_(tag) {}

  // Fluid outside the circle.
  static ImplicitBoundary circle_hole(const Vec2& centre, double radius);
  // Fluid where a*x + b*y < c.
  static ImplicitBoundary half_plane(double a, double b, double c);
  // No interface at all.
  static ImplicitBoundary none();

  double operator()(const Vec2& x) const { return phi_(x); }
  [[nodiscard]] int tag() const noexcept { return tag_; }

 private:
  Fn phi_;
  int tag_;
};

enum class CutKind : std::uint8_t {
  None,           // uncut or grazing
  OppositeEdges,  // A
  AdjacentEdges,  // B
  VertexEdge,     // C
  Diagonal,       // D
};

// Patch corners are numbered counter-clockwise from (xmin,ymin); edge k runs from corner k to k+1.
struct CutPattern {
  CutKind kind = CutKind::None;
  std::array<int, 4> corner_sign{};  // -1 inside, +1 outside, 0 on the boundary (after snapping)
  std::array<double, 4> edge_param{-1, -1, -1, -1};  // crossing parameter along edge k, or -1
  [[nodiscard]] int n_crossed() const noexcept;
  [[nodiscard]] int n_zero() const noexcept;
};

enum class CellKind : std::uint8_t { Triangle, Quadrilateral };
enum class Region : std::uint8_t { Regular = 0, Aniso = 1 };

struct Cell {
  CellKind kind = CellKind::Quadrilateral;
  std::array<Index, 4> v{-1, -1, -1, -1};
  Region region = Region::Regular;
  Index patch = -1;
  [[nodiscard]] int n_vertices() const noexcept { return kind == CellKind::Triangle ? 3 : 4; }
};

// Cells of one subdivided patch, referring to the 9 local patch nodes.
struct PatchSubdivision {
  std::array<Vec2, 9> nodes;
  std::array<int, 9> side{};  // node side label, 0 on the chord
  std::vector<Cell> cells;    // vertex ids are local node numbers
  std::vector<int> cell_side;  // -1 fluid, +1 exterior
};

enum class EdgeClass : std::uint8_t { Regular = 0, Aniso = 1, BoundaryExterior = 2 };

struct Edge {
  std::array<Index, 2> v{-1, -1};
  std::array<Index, 2> cells{-1, -1};
  std::array<int, 2> local{-1, -1};  // local edge number inside each adjacent cell
  std::array<double, 2> h_n{0.0, 0.0};
  double length = 0.0;
  EdgeClass cls = EdgeClass::Regular;
  int tag = kInterior;
  bool outer_patch = false;
  [[nodiscard]] bool is_boundary() const noexcept { return cells[1] < 0; }
  [[nodiscard]] double h_tau() const noexcept { return length; }
  [[nodiscard]] double mean_h_n() const noexcept { return is_boundary() ? h_n[0] : 0.5 * (h_n[0] + h_n[1]); }
};

class Mesh {
 public:
  // Drops unused vertices and derives edges, areas and classes.
  Mesh(std::vector<Vec2> vertices, std::vector<Cell> cells, double H, const Box& bbox);

  [[nodiscard]] std::span<const Vec2> vertices() const noexcept { return vertices_; }
  [[nodiscard]] std::span<const Cell> cells() const noexcept { return cells_; }
  [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }
  [[nodiscard]] Index n_vertices() const noexcept { return static_cast<Index>(vertices_.size()); }
  [[nodiscard]] Index n_cells() const noexcept { return static_cast<Index>(cells_.size()); }
  [[nodiscard]] Index n_edges() const noexcept { return static_cast<Index>(edges_.size()); }
  [[nodiscard]] const Vec2& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] const Cell& cell(Index i) const { return cells_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] const Edge& edge(Index i) const { return edges_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] double H() const noexcept { return H_; }
  [[nodiscard]] const Box& bbox() const noexcept { return bbox_; }
  [[nodiscard]] double cell_area(Index c) const { return area_[static_cast<std::size_t>(c)]; }
  [[nodiscard]] std::span<const Index> cell_edges(Index c) const {
    return {cell_edges_.data() + 4 * c, static_cast<std::size_t>(cell(c).n_vertices())};
  }
  [[nodiscard]] std::span<const Index> vertex_cells(Index v) const {
    const auto b = static_cast<std::size_t>(vc_offsets_[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(vc_offsets_[static_cast<std::size_t>(v) + 1]);
    return {vc_cells_.data() + b, e - b};
  }
  // Bitmask over boundary tags (bit t set if the vertex touches a boundary edge tagged t).
  [[nodiscard]] unsigned vertex_tags(Index v) const { return vtags_[static_cast<std::size_t>(v)]; }
  [[nodiscard]] bool on_boundary(Index v) const { return vertex_tags(v) != 0; }
  [[nodiscard]] double area_regular() const noexcept { return area_regular_; }
  [[nodiscard]] double area_aniso() const noexcept { return area_aniso_; }
  [[nodiscard]] double total_area() const noexcept { return area_regular_ + area_aniso_; }
  // Shortest and longest edge of a cell.
  [[nodiscard]] double min_edge(Index c) const;
  [[nodiscard]] double max_edge(Index c) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Edge> edges_;
  std::vector<double> area_;
  std::vector<Index> cell_edges_;
  std::vector<Index> vc_offsets_, vc_cells_;
  std::vector<unsigned> vtags_;
  double H_;
  Box bbox_;
  double area_regular_ = 0.0, area_aniso_ = 0.0;
};

double signed_area(std::span<const Vec2> poly) noexcept;
double max_interior_angle(std::span<const Vec2> poly) noexcept;  // degrees

CutPattern cut_patch(const PatchMesh& pm, int i, int j, const ImplicitBoundary& boundary,
                     double snap_tol = 1e-8);
// Classifies from corner signs and crossing parameters; throws unsupported-cut.
CutPattern classify_cut(const std::array<int, 4>& corner_sign, const std::array<double, 4>& edge_param);
PatchSubdivision subdivide_patch(const std::array<Vec2, 4>& corners, const CutPattern& pattern);

Mesh build_lmfem_mesh(const PatchMesh& pm, const ImplicitBoundary& boundary, double snap_tol = 1e-8);
Mesh build_alternating_mesh(int n_coarse, double ratio, const Box& bbox, bool all_aniso = true);

struct QualityReport {
  double K_max = 0, K_min = 0, ratio = 0, e_max = 0, e_min = 0, kappa_max = 0, angle_max = 0;
};
QualityReport mesh_quality_report(const Mesh& m);

void write_vtk_mesh(const Mesh& m, std::ostream& os);

}  // namespace anisostokes
