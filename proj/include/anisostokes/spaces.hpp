#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "anisostokes/mesh.hpp"

namespace anisostokes {

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
};

// Gauss-Legendre on [0,1], n in 1..4.
const QuadratureRule& gauss_1d(int n);
// degree 2 (3 points) or 5 (7 points) on the unit triangle.
const QuadratureRule& triangle_rule(int degree);
// n x n Gauss on [0,1]^2.
const QuadratureRule& quad_rule(int n);

class RefElement {
 public:
  explicit RefElement(CellKind kind) : kind_(kind) {}
  [[nodiscard]] CellKind kind() const noexcept { return kind_; }
  [[nodiscard]] int n_dofs() const noexcept { return kind_ == CellKind::Triangle ? 3 : 4; }
  [[nodiscard]] std::array<double, 4> values(const Vec2& xi) const noexcept;
  [[nodiscard]] std::array<Vec2, 4> gradients(const Vec2& xi) const noexcept;
  [[nodiscard]] std::span<const Vec2> nodes() const noexcept;
  // Point on local edge l (from node l to node l+1) at parameter t.
  [[nodiscard]] Vec2 edge_point(int l, double t) const noexcept;
  [[nodiscard]] const QuadratureRule& stiffness_rule() const;
  [[nodiscard]] const QuadratureRule& accurate_rule() const;

 private:
  CellKind kind_;
};

const RefElement& ref_element(CellKind kind);

class ElementMap {
 public:
  ElementMap(const Mesh& m, Index cell);
  [[nodiscard]] CellKind kind() const noexcept { return kind_; }
  [[nodiscard]] Vec2 map(const Vec2& xi) const noexcept;
  [[nodiscard]] Eigen::Matrix2d jacobian(const Vec2& xi) const noexcept;
  // Throws inverted-cell when det J <= 0.
  [[nodiscard]] double det(const Vec2& xi) const;
  // Physical shape gradients at xi.
  [[nodiscard]] std::array<Vec2, 4> grad_shape(const Vec2& xi) const;
  // Reference coordinates of x if it lies in the cell (within tol in reference units).
  [[nodiscard]] std::optional<Vec2> inverse(const Vec2& x, double tol = 1e-10) const;

 private:
  CellKind kind_;
  std::array<Vec2, 4> x_;
};

struct QPoint {
  Vec2 x;
  double JxW = 0.0;
  std::array<double, 4> phi{};
  std::array<Vec2, 4> grad{};
};

// Quadrature points with mapped shape data; accurate = error-norm rule.
void cell_quadrature(const Mesh& m, Index cell, bool accurate, std::vector<QPoint>& out);

using ScalarFn = std::function<double(const Vec2&)>;

class FeSpace {
 public:
  FeSpace(std::shared_ptr<const Mesh> mesh, std::span<const int> dirichlet_tags);

  [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
  [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
  [[nodiscard]] Index n_dofs() const noexcept { return mesh_->n_vertices(); }
  [[nodiscard]] const Vec2& dof_point(Index i) const { return mesh_->vertex(i); }
  [[nodiscard]] unsigned dof_tags(Index i) const { return mesh_->vertex_tags(i); }
  [[nodiscard]] bool is_dirichlet(Index i) const { return dirichlet_[static_cast<std::size_t>(i)] != 0; }
  [[nodiscard]] Index n_dirichlet() const noexcept { return n_dirichlet_; }
  [[nodiscard]] std::span<const int> dirichlet_tags() const noexcept { return tags_; }
  // True when every boundary edge carries a Dirichlet tag.
  [[nodiscard]] bool pure_dirichlet() const noexcept { return pure_dirichlet_; }
  // Cell containing x and its reference coordinates, or nullopt.
  [[nodiscard]] std::optional<std::pair<Index, Vec2>> locate(const Vec2& x) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<int> tags_;
  std::vector<char> dirichlet_;
  Index n_dirichlet_ = 0;
  bool pure_dirichlet_ = false;
  // Bucket grid for point location.
  int nb_ = 1;
  double bx0_ = 0, by0_ = 0, bdx_ = 1, bdy_ = 1;
  std::vector<Index> bucket_offsets_, bucket_cells_;
};

FeSpace build_space(std::shared_ptr<const Mesh> mesh, std::span<const int> dirichlet_tags);

struct PointValue {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
};

// Throws out-of-domain when x is not in the mesh.
PointValue evaluate(const FeSpace& space, std::span<const double> coeffs, const Vec2& x);

Eigen::VectorXd interpolate(const FeSpace& space, const ScalarFn& f);

}  // namespace anisostokes
