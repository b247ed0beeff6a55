#pragma once

#include <Eigen/Sparse>
#include <string>

#include "anisostokes/error.hpp"

namespace anisostokes {

// Compressed row storage with sorted column indices.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SolveReport {
  double residual = 0.0;       // ||b - A x|| / ||b|| (absolute when b = 0)
  double rcond_estimate = 0.0;  // 1 / (||A||_1 ||A^-1||_1), estimated
  long n = 0;
  long nnz = 0;
  int refinement_steps = 0;
};

class SolveError : public Error {
 public:
  SolveError(const std::string& what, const SolveReport& report)
      : Error(ErrorCode::SingularMatrix, what), report_(report) {}
  [[nodiscard]] const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveReport report;
};

// Sparse LU; throws SolveError when the factorisation breaks down or the residual exceeds tol.
SolveResult solve(const SparseMatrix& A, const Eigen::VectorXd& b, double tol = 1e-10);

void write_matrix_market(const SparseMatrix& A, const std::string& path);
SparseMatrix read_matrix_market(const std::string& path);

}  // namespace anisostokes
