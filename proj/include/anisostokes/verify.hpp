#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "anisostokes/stabilize.hpp"
#include "anisostokes/stokes.hpp"

namespace anisostokes {

// Curl of k^2 (x-1)^3 with k = (x-x0)^2 + (y-y0)^2 - r^2.
class ExactSolution {
 public:
  ExactSolution(double x0, double y0, double r, double nu = 1.0) : x0_(x0), y0_(y0), r_(r), nu_(nu) {}
  [[nodiscard]] Vec2 velocity(const Vec2& x) const noexcept;
  // Row c holds grad of component c.
  [[nodiscard]] Eigen::Matrix2d velocity_gradient(const Vec2& x) const noexcept;
  [[nodiscard]] double pressure(const Vec2& x) const noexcept;
  [[nodiscard]] Vec2 pressure_gradient(const Vec2& x) const noexcept;
  [[nodiscard]] Vec2 forcing(const Vec2& x) const noexcept;
  [[nodiscard]] double nu() const noexcept { return nu_; }
  [[nodiscard]] double x0() const noexcept { return x0_; }
  [[nodiscard]] double y0() const noexcept { return y0_; }
  [[nodiscard]] double radius() const noexcept { return r_; }

 private:
  double x0_, y0_, r_, nu_;
};

ExactSolution manufactured_solution(double x0, double y0, double r, double nu = 1.0);

struct ErrorNorms {
  double v_h1 = 0, v_l2 = 0, p_l2 = 0, p_h1 = 0;
};

ErrorNorms error_norms(const FeSpace& space, const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                       const Eigen::VectorXd& p, const ExactSolution& exact);

// L2 norm and H1 seminorm of a discrete field.
double l2_norm(const FeSpace& space, const Eigen::VectorXd& u);
double h1_seminorm(const FeSpace& space, const Eigen::VectorXd& u);

struct OrderFit {
  double c = 0.0, alpha = 0.0;
};

// Least squares of log e = log c + alpha log H.
OrderFit fit_order(std::span<const double> H, std::span<const double> e);

struct ConvergenceRow {
  double H = 0;
  ErrorNorms err;
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
  // Orders for v_h1, v_l2, p_l2, p_h1.
  [[nodiscard]] std::array<OrderFit, 4> fits() const;
};

void write_convergence_csv(const ConvergenceRecord& rec, std::ostream& os);

enum class RitzMode { Dirichlet, MeanValue };

Eigen::VectorXd ritz_project(const FeSpace& space, const ScalarFn& u, const std::function<Vec2(const Vec2&)>& grad_u,
                             RitzMode mode);

double triple_norm(const FeSpace& space, const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                   const Eigen::VectorXd& p, double nu);

// One manufactured-solution solve on a given mesh.
struct ProblemSetup {
  std::shared_ptr<const Mesh> mesh;
  std::vector<int> dirichlet_tags;
  StabConfig stab;
  ExactSolution exact{0.0, 0.0, 0.4};
  PressureGauge gauge = PressureGauge::None;
  double tol = 1e-10;
};

struct DiscreteSolution {
  std::shared_ptr<const FeSpace> space;
  Eigen::VectorXd v1, v2, p;
  SolveReport report;
  GaugeReport gauge;
};

StokesSystem assemble_problem(const ProblemSetup& setup, const FeSpace& space, GaugeReport* gauge = nullptr);
DiscreteSolution solve_problem(const ProblemSetup& setup);

// Example-1 and Example-2 geometries.
std::shared_ptr<const Mesh> example1_mesh(double H, double ratio = 1e-3);
std::shared_ptr<const Mesh> example2_mesh(double H, double x0, double y0, double radius, double snap_tol = 1e-8);
std::vector<int> example1_dirichlet_tags();
std::vector<int> example2_dirichlet_tags();

struct SweepRow {
  double x0 = 0;
  double p_h1 = 0;  // ||grad p_h||
  double kappa_max = 0;
  double K_min = 0;
  double residual = 0;
  bool ok = false;
  std::string error;
};

struct SweepConfig {
  double H = 0.125;
  double x0_begin = 0.0, x0_end = 0.249, step = 1e-3;
  double y0 = 0.0, radius = 0.4;
  StabConfig stab = StabConfig::uniform(StabVariant::S, 2.5e-3);
  double snap_tol = 1e-8;
  int threads = 1;
};

std::vector<SweepRow> x0_sweep(const SweepConfig& cfg);
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& os);

void write_vtk_fields(const Mesh& m, const Eigen::VectorXd& v1, const Eigen::VectorXd& v2, const Eigen::VectorXd& p,
                      std::ostream& os);

// printf("%.6g") without locale surprises.
std::string fmt6(double v);

}  // namespace anisostokes
