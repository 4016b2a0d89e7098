#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "shapeflow/error.hpp"
#include "shapeflow/fem.hpp"

namespace shapeflow {

namespace {

Eigen::VectorXd solve_direct(const SparseMatrix &matrix, const Eigen::VectorXd &rhs,
                             const SolverOptions &options, SolveReport *report) {
  const Eigen::SparseMatrix<double> colmajor = matrix;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(colmajor);
  if (ldlt.info() != Eigen::Success)
    throw SolverFailure("sparse LDL^T factorization failed", 1.0);
  Eigen::VectorXd x = ldlt.solve(rhs);
  const double relative = (rhs - matrix * x).norm() / rhs.norm();
  if (report) *report = {1, relative};
  if (!(relative <= options.rel_tol))
    throw SolverFailure("sparse LDL^T solve inaccurate", relative);
  return x;
}

}  // namespace

struct SpdFactorization::Impl {
  SparseMatrix matrix;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

SpdFactorization::SpdFactorization(const SparseMatrix &matrix) : impl_(std::make_unique<Impl>()) {
  require(matrix.rows() == matrix.cols(), "factorization needs a square matrix");
  impl_->matrix = matrix;
  impl_->ldlt.compute(Eigen::SparseMatrix<double>(matrix));
  if (impl_->ldlt.info() != Eigen::Success)
    throw SolverFailure("sparse LDL^T factorization failed", 1.0);
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization &&) noexcept = default;
SpdFactorization &SpdFactorization::operator=(SpdFactorization &&) noexcept = default;

Eigen::VectorXd SpdFactorization::solve(const Eigen::VectorXd &rhs, double rel_tol) const {
  require(rhs.size() == impl_->matrix.rows(), "system size mismatch");
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd x = impl_->ldlt.solve(rhs);
  x += impl_->ldlt.solve(rhs - impl_->matrix * x);
  const double relative = (rhs - impl_->matrix * x).norm() / bnorm;
  if (!(relative <= rel_tol)) throw SolverFailure("sparse LDL^T solve inaccurate", relative);
  return x;
}

Eigen::VectorXd solve_spd(const SparseMatrix &matrix, const Eigen::VectorXd &rhs,
                          const SolverOptions &options, SolveReport *report) {
  const Eigen::Index n = matrix.rows();
  require(matrix.cols() == n && rhs.size() == n, "system size mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    if (report) *report = {0, 0.0};
    return x;
  }
  if (options.kind == SolverKind::Direct) return solve_direct(matrix, rhs, options, report);

  Eigen::VectorXd inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = matrix.coeff(i, i);
    require(d > 0.0, "matrix has a nonpositive diagonal entry", ErrorKind::Solver);
    inv_diag[i] = 1.0 / d;
  }

  const long cap = static_cast<long>(options.max_iter_factor) * static_cast<long>(n);
  const double target = options.rel_tol * bnorm;
  // Healthy CG halves the residual far faster than this; missing it means
  // stagnation, and the direct path is cheaper than running to the cap.
  const long stall_window = std::max<long>(50, n / 8);
  bool stalled = false;
  long iterations = 0;
  double true_residual = bnorm;
  // Restart from the true residual when the recursive one drifts.
  for (int restart = 0; restart < 8; ++restart) {
    Eigen::VectorXd r = rhs - matrix * x;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    Eigen::VectorXd ap(n);
    double checkpoint = r.norm();
    long since_checkpoint = 0;
    while (r.norm() > 0.5 * target && iterations < cap) {
      if (++since_checkpoint > stall_window) {
        const double now = r.norm();
        if (now > 0.5 * checkpoint) {
          stalled = true;
          break;
        }
        checkpoint = now;
        since_checkpoint = 0;
      }
      ap.noalias() = matrix * p;
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      x.noalias() += alpha * p;
      r.noalias() -= alpha * ap;
      z = inv_diag.cwiseProduct(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
      ++iterations;
    }
    true_residual = (rhs - matrix * x).norm();
    if (true_residual <= target || iterations >= cap || stalled) break;
  }
  const double relative = true_residual / bnorm;
  if (report) *report = {static_cast<int>(iterations), relative};
  if (true_residual <= target) return x;
  // CG stagnates above the tolerance on nearly degenerate meshes; a sparse
  // factorization usually still reaches it.
  try {
    return solve_direct(matrix, rhs, options, report);
  } catch (const SolverFailure &) {
    throw SolverFailure("conjugate gradients did not converge in " +
                            std::to_string(iterations) + " iterations",
                        relative);
  }
}

}  // namespace shapeflow
