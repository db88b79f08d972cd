#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "qflow/errors.hpp"

namespace qflow {

using Cx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

// Frobenius norm shorthand; all matrix distances in the library use it.
inline double fnorm(const CMat& m) { return m.norm(); }

/* Validated Hermitian matrix.  `from` enforces H = H^dagger entrywise to
 * 1e-12 * max |entry| and finiteness; `hermitized` symmetrizes first and is
 * the cheap path for matrices Hermitian by construction up to roundoff. */
class HermitianMatrix {
 public:
  static HermitianMatrix from(const CMat& m);
  static HermitianMatrix hermitized(const CMat& m);
  static HermitianMatrix zero(int dim);
  static HermitianMatrix identity(int dim);

  const CMat& mat() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  double trace() const { return m_.trace().real(); }

 private:
  explicit HermitianMatrix(CMat m) : m_(std::move(m)) {}
  CMat m_;
};

/* Density matrix: Hermitian, trace 1 within 1e-10, min eigenvalue >= -1e-10.
 * `from` checks all three; `trusted` skips the eigenvalue scan for states
 * assembled from an explicit spectral form (mirror outputs). */
class DensityMatrix {
 public:
  static DensityMatrix from(const HermitianMatrix& h);
  static DensityMatrix from(const CMat& m) { return from(HermitianMatrix::from(m)); }
  static DensityMatrix trusted(const HermitianMatrix& h) { return DensityMatrix(h); }
  static DensityMatrix uniform(int dim);
  // Computational-basis classical state diag(p); p must lie on the simplex.
  static DensityMatrix diagonal(const std::vector<double>& p);

  const CMat& mat() const { return h_.mat(); }
  const HermitianMatrix& hermitian() const { return h_; }
  int dim() const { return h_.dim(); }

 private:
  explicit DensityMatrix(HermitianMatrix h) : h_(std::move(h)) {}
  HermitianMatrix h_;
};

/* Spectral factorization H = U diag(x) U^dagger with eigenvalues descending
 * and each eigenvector's first component of magnitude > 1e-12 made real
 * positive, so identical input bytes give identical output bytes. */
struct EigenDecomposition {
  RVec eigenvalues;   // descending
  CMat eigenvectors;  // unitary, k-th column pairs with eigenvalues[k]
};

EigenDecomposition hermitian_eig(const HermitianMatrix& h);
EigenDecomposition hermitian_eig(const CMat& m);  // hermitizes, then solves

// Kronecker product: (A (x) B)[a*rB + r, b*cB + c] = A[a,b] * B[r,c].
CMat tensor_product(const CMat& a, const CMat& b);

/* Partial trace of an operator on a tensor product of subsystems with the
 * given dims, keeping factor `keep` (0-based) and tracing out the rest. */
CMat partial_trace(const CMat& m, const std::vector<int>& dims, int keep);
HermitianMatrix partial_trace(const HermitianMatrix& m, const std::vector<int>& dims,
                              int keep);

/* Functional calculus f(H) = sum_k f(x_k) u_k u_k^dagger.  Throws
 * DomainError if f is non-finite at any eigenvalue. */
HermitianMatrix func_calculus(const HermitianMatrix& h,
                              const std::function<double(double)>& f);

}  // namespace qflow
