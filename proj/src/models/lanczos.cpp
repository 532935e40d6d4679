#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "superwit/models.hpp"

namespace superwit::models {

EigenPair lanczos_lowest(const SparseC& h, double tol, int krylov_dim, int max_restarts, std::uint64_t seed) {
  const int n = static_cast<int>(h.rows());
  if (n == 0 || h.cols() != n) throw std::invalid_argument("lanczos_lowest: matrix must be square and non-empty");
  const int m = std::max(2, std::min(krylov_dim, n));

  std::mt19937_64 rng(seed);
  CVector v0(n);
  for (int i = 0; i < n; ++i)
    v0[i] = cplx(static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5, static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
  v0.normalize();

  EigenPair out;
  CMatrix V(n, m + 1);
  for (int restart = 0; restart <= max_restarts; ++restart) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m), beta = Eigen::VectorXd::Zero(m);
    V.col(0) = v0;
    int k = m;
    for (int j = 0; j < m; ++j) {
      CVector w = h * V.col(j);
      alpha[j] = V.col(j).dot(w).real();
      // full reorthogonalisation, twice for stability
      for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
      beta[j] = w.norm();
      ++out.iterations;
      if (beta[j] < 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
        k = j + 1;
        break;
      }
      V.col(j + 1) = w / beta[j];
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int j = 0; j < k; ++j) {
      t(j, j) = alpha[j];
      if (j + 1 < k) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const double theta = es.eigenvalues()(0);
    CVector x = V.leftCols(k) * es.eigenvectors().col(0).cast<cplx>();
    x.normalize();
    const double res = (h * x - theta * x).norm();
    out.value = theta;
    out.vector = x;
    if (res <= tol * std::max(1.0, std::abs(theta))) {
      out.converged = true;
      return out;
    }
    v0 = x;
  }
  return out;
}

}  // namespace superwit::models
