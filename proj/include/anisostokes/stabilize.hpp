#pragma once

#include <iosfwd>
#include <vector>

#include "anisostokes/solver.hpp"
#include "anisostokes/spaces.hpp"

namespace anisostokes {

enum class StabVariant { None, S, S2, Scip };

struct StabConfig {
  StabVariant variant = StabVariant::S;
  double gamma_aniso = 1e-2;    // gamma_i
  double gamma_regular = 1e-2;  // gamma_0; also the S_cip parameter
  bool skip_outer_patch_jumps = true;  // applies to S, S2 and S_cip

  static StabConfig uniform(StabVariant v, double gamma) { return {v, gamma, gamma, true}; }
  // Throws invalid-argument unless both gammas are positive (or the variant is None).
  void validate() const;
};

struct EdgeContribution {
  Index edge = -1;
  std::vector<Index> dofs;
  Eigen::MatrixXd local;
};

struct StabMatrix {
  SparseMatrix matrix;
  std::vector<EdgeContribution> ledger;
};

StabMatrix assemble_S(const FeSpace& space_p, const StabConfig& cfg);
StabMatrix assemble_S2(const FeSpace& space_p, const StabConfig& cfg);
StabMatrix assemble_Scip(const FeSpace& space_p, const StabConfig& cfg);
// Dispatches on cfg.variant; None gives an empty matrix of the right size.
StabMatrix assemble_stabilization(const FeSpace& space_p, const StabConfig& cfg);

double stab_energy(const StabMatrix& mat, const Eigen::VectorXd& p);

// Per-cell split of S(p,p): interior edge terms are halved between the two sides,
// boundary terms go to their only cell. Sums to stab_energy of assemble_S.
std::vector<double> cellwise_S(const FeSpace& space_p, const StabConfig& cfg, const Eigen::VectorXd& p);

// Shortest edge on aniso cells, H on regular ones.
std::vector<double> tilde_h_min(const Mesh& m);

// Cellwise vector field given by its values at the cell vertices.
struct DgVectorField {
  std::vector<std::array<Vec2, 4>> values;
};

// h~_min^2 grad p evaluated at each cell's vertices.
DgVectorField scaled_gradient(const FeSpace& space, const Eigen::VectorXd& p);

// Nodal selection from the adjacent cell with the smallest h~_min; zero on the boundary.
std::vector<Vec2> tau_h(const FeSpace& space, const DgVectorField& field);

void write_edge_ledger_csv(const Mesh& m, const StabMatrix& mat, const Eigen::VectorXd& p, std::ostream& os);

}  // namespace anisostokes
