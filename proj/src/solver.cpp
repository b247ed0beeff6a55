#include "anisostokes/solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>
#include <unsupported/Eigen/SparseExtra>

namespace anisostokes {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using LU = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;

double norm1(const ColMatrix& A) {
  double m = 0.0;
  for (int j = 0; j < A.outerSize(); ++j) {
    double s = 0.0;
    for (ColMatrix::InnerIterator it(A, j); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

// Hager's estimate of ||A^-1||_1 from a handful of solves with A and A^T.
double inverse_norm1(LU& lu, long n) {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double est = 0.0;
  for (int it = 0; it < 5; ++it) {
    const Eigen::VectorXd y = lu.solve(x);
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    est = std::max(est, y.lpNorm<1>());
    const Eigen::VectorXd xi = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    const Eigen::VectorXd z = lu.transpose().solve(xi);
    Eigen::Index j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= z.dot(x)) break;
    x.setZero();
    x[j] = 1.0;
  }
  // Higham's alternating-sign probe guards against the unlucky start.
  Eigen::VectorXd alt(n);
  for (long i = 0; i < n; ++i)
    alt[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + static_cast<double>(i) / static_cast<double>(std::max(n - 1, 1L)));
  const Eigen::VectorXd y = lu.solve(alt);
  return std::max(est, 2.0 * y.lpNorm<1>() / (3.0 * static_cast<double>(n)));
}

}  // namespace

SolveResult solve(const SparseMatrix& A, const Eigen::VectorXd& b, double tol) {
  require(A.rows() == A.cols(), ErrorCode::InvalidArgument, "matrix must be square");
  require(b.size() == A.rows(), ErrorCode::InvalidArgument, "right-hand side size mismatch");
  require(tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  SolveResult out;
  SolveReport& rep = out.report;
  rep.n = A.rows();
  rep.nnz = A.nonZeros();
  if (A.rows() == 0) return out;

  ColMatrix C(A);
  C.makeCompressed();
  LU lu;
  lu.analyzePattern(C);
  lu.factorize(C);
  if (lu.info() != Eigen::Success) throw SolveError("sparse LU failed: " + lu.lastErrorMessage(), rep);

  rep.rcond_estimate = 1.0 / (norm1(C) * inverse_norm1(lu, rep.n));
  const double bn = b.norm();
  const double scale = bn > 0.0 ? bn : 1.0;
  out.x = lu.solve(b);
  Eigen::VectorXd r = b - A * out.x;
  rep.residual = r.norm() / scale;
  for (int k = 0; k < 3 && rep.residual > 1e-2 * tol && std::isfinite(rep.residual); ++k) {
    const Eigen::VectorXd dx = lu.solve(r);
    const Eigen::VectorXd x1 = out.x + dx;
    const Eigen::VectorXd r1 = b - A * x1;
    const double res1 = r1.norm() / scale;
    if (!(res1 < rep.residual)) break;
    out.x = x1;
    r = r1;
    rep.residual = res1;
    ++rep.refinement_steps;
  }
  if (!out.x.allFinite() || !std::isfinite(rep.residual))
    throw SolveError("non-finite solution (singular matrix)", rep);
  if (rep.residual > tol)
    throw SolveError("relative residual " + std::to_string(rep.residual) + " exceeds tolerance", rep);
  return out;
}

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
  const ColMatrix C(A);
  require(Eigen::saveMarket(C, path), ErrorCode::IoError, "cannot write " + path);
}

SparseMatrix read_matrix_market(const std::string& path) {
  {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::IoError, "cannot open " + path);
    std::string header;
    std::getline(is, header);
    require(header.rfind("%%MatrixMarket matrix coordinate", 0) == 0, ErrorCode::IoError,
            path + ": not a MatrixMarket coordinate file");
  }
  ColMatrix C;
  require(Eigen::loadMarket(C, path), ErrorCode::IoError, "cannot read " + path);
  SparseMatrix A(C);
  A.makeCompressed();
  return A;
}

}  // namespace anisostokes
