#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "anisostokes/stabilize.hpp"
#include "anisostokes/verify.hpp"

namespace anisostokes::testkit {

// Random cut of the given kind in a random frame of the unit patch.
struct RandomCut {
  std::array<Vec2, 4> corners;
  CutPattern pattern;
};
RandomCut random_cut(CutKind kind, std::uint64_t& state);

// Largest triangle angle (degrees) and worst relative area defect over samples of every cut kind.
struct CutSweep {
  double max_angle = 0.0;
  double max_area_defect = 0.0;
  long triangles = 0;
};
CutSweep cut_sweep(int samples_per_kind, std::uint64_t seed);

Eigen::VectorXd random_vector(Index n, std::uint64_t seed);

// Per-variant algebraic checks of a stabilisation matrix.
struct StabChecks {
  double asymmetry = 0.0;      // max |S - S^T| / max |S|
  double min_rayleigh = 0.0;   // min over samples of p^T S p / |p|^2
  double kernel = 0.0;         // |S 1|_inf / max |S|
  double max_abs = 0.0;
};
StabChecks check_stabilization(const FeSpace& space, const StabConfig& cfg, int samples, std::uint64_t seed);

// S(p,p) recomputed edge by edge through point location and ElementMap::inverse.
double stab_energy_oracle_S(const FeSpace& space, const StabConfig& cfg, const Eigen::VectorXd& p);

// Measured constants over random pressures on the alternating mesh of the given ratio.
struct Lemma3Constants {
  double lower = 0.0;     // sup H^2 |grad p|^2_aniso / S(p,p)
  double upper = 0.0;     // sup S(p,p) / (H^2 |grad p|^2)
  double tau_stab = 0.0;  // sup |grad tau_h(h~^2 grad p)| / (H |grad p|)
  double proj = 0.0;      // sup over cells |h~^2 grad p - tau_h|^2_K / (h~^2 sum_{L in N(K)} S_L)
};
Lemma3Constants lemma3_constants(double H, double ratio, int samples, std::uint64_t seed);

// Relative defect of A(v,p)(v,p) = nu |grad v|^2 on random coefficients.
double galerkin_identity_defect(const std::shared_ptr<const Mesh>& mesh, double nu, std::uint64_t seed);

// Pointwise residual maxima of the manufactured solution on sampled points.
struct ExactResiduals {
  double divergence = 0.0;
  double momentum = 0.0;    // relative to max |f|
  double do_nothing = 0.0;
};
ExactResiduals exact_residuals(const ExactSolution& ex, int samples, std::uint64_t seed);

// tau_h checks: fixed point on a continuous zero-trace field, zero on the boundary, argmin pick.
struct TauChecks {
  double fixed_point = 0.0;  // max nodal defect
  double boundary = 0.0;     // max |tau| on boundary vertices
  bool argmin_ok = false;
  bool aniso_tie_ok = false;
};
TauChecks tau_checks();

}  // namespace anisostokes::testkit
