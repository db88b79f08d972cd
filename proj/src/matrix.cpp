#include "qflow/matrix.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qflow {

namespace {

constexpr double kHermTol = 1e-12;      // relative, against max |entry|
constexpr double kTraceTol = 1e-10;     // |tr - 1| for density matrices
constexpr double kPsdTol = -1e-10;      // min eigenvalue floor
constexpr double kPhaseTol = 1e-12;     // "first nonzero" component threshold

bool all_finite(const CMat& m) {
  return m.allFinite();
}

}  // namespace

HermitianMatrix HermitianMatrix::from(const CMat& m) {
  if (m.rows() != m.cols())
    throw DimensionError("HermitianMatrix: matrix is not square");
  if (!all_finite(m))
    throw ValidationError("HermitianMatrix: non-finite entry");
  const double scale = m.cwiseAbs().maxCoeff();
  const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > kHermTol * std::max(scale, 1.0))
    throw ValidationError("HermitianMatrix: entrywise deviation from H = H^dagger is " +
                          std::to_string(dev));
  return hermitized(m);
}

HermitianMatrix HermitianMatrix::hermitized(const CMat& m) {
  if (m.rows() != m.cols())
    throw DimensionError("HermitianMatrix: matrix is not square");
  return HermitianMatrix(((m + m.adjoint()) / 2.0).eval());
}

HermitianMatrix HermitianMatrix::zero(int dim) {
  return HermitianMatrix(CMat::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  return HermitianMatrix(CMat::Identity(dim, dim));
}

DensityMatrix DensityMatrix::from(const HermitianMatrix& h) {
  const double tr = h.trace();
  if (std::abs(tr - 1.0) > kTraceTol)
    throw ValidationError("DensityMatrix: trace is " + std::to_string(tr));
  Eigen::SelfAdjointEigenSolver<CMat> es(h.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("DensityMatrix: eigenvalue scan did not converge");
  const double lo = es.eigenvalues().minCoeff();
  if (lo < kPsdTol)
    throw ValidationError("DensityMatrix: min eigenvalue is " + std::to_string(lo));
  return DensityMatrix(h);
}

DensityMatrix DensityMatrix::uniform(int dim) {
  CMat m = CMat::Identity(dim, dim) / static_cast<double>(dim);
  return DensityMatrix(HermitianMatrix::hermitized(m));
}

DensityMatrix DensityMatrix::diagonal(const std::vector<double>& p) {
  const int d = static_cast<int>(p.size());
  CMat m = CMat::Zero(d, d);
  for (int k = 0; k < d; ++k) m(k, k) = p[k];
  return from(HermitianMatrix::hermitized(m));
}

EigenDecomposition hermitian_eig(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h.mat());
  if (es.info() != Eigen::Success)
    throw ConvergenceError("hermitian_eig: eigensolver did not converge");
  const int d = h.dim();
  EigenDecomposition out;
  out.eigenvalues = RVec(d);
  out.eigenvectors = CMat(d, d);
  // Eigen sorts ascending; emit descending.
  for (int k = 0; k < d; ++k) {
    out.eigenvalues[k] = es.eigenvalues()[d - 1 - k];
    out.eigenvectors.col(k) = es.eigenvectors().col(d - 1 - k);
  }
  // Phase convention: first component with |u_j| > 1e-12 made real positive.
  for (int k = 0; k < d; ++k) {
    for (int j = 0; j < d; ++j) {
      const Cx u = out.eigenvectors(j, k);
      if (std::abs(u) > kPhaseTol) {
        out.eigenvectors.col(k) *= std::conj(u) / std::abs(u);
        break;
      }
    }
  }
  return out;
}

EigenDecomposition hermitian_eig(const CMat& m) {
  return hermitian_eig(HermitianMatrix::hermitized(m));
}

CMat tensor_product(const CMat& a, const CMat& b) {
  const auto ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  CMat out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j)
      out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

CMat partial_trace(const CMat& m, const std::vector<int>& dims, int keep) {
  Eigen::Index joint = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionError("partial_trace: subsystem dim must be positive");
    joint *= d;
  }
  if (m.rows() != joint || m.cols() != joint)
    throw DimensionError("partial_trace: operator is " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + " but dims multiply to " +
                         std::to_string(joint));
  if (keep < 0 || keep >= static_cast<int>(dims.size()))
    throw DimensionError("partial_trace: keep index out of range");

  // Row-major multi-index: factor k has stride prod(dims[k+1:]).
  const int n = static_cast<int>(dims.size());
  std::vector<Eigen::Index> stride(n, 1);
  for (int k = n - 2; k >= 0; --k) stride[k] = stride[k + 1] * dims[k + 1];

  const int dk = dims[keep];
  const Eigen::Index sk = stride[keep];
  const Eigen::Index rest = joint / dk;  // joint index with factor `keep` removed
  CMat out = CMat::Zero(dk, dk);
  for (int a = 0; a < dk; ++a)
    for (int b = 0; b < dk; ++b) {
      Cx acc = 0.0;
      for (Eigen::Index r = 0; r < rest; ++r) {
        // Re-insert a/b at position `keep` of the flattened multi-index r.
        const Eigen::Index hi = (r / sk) * (sk * dk);
        const Eigen::Index lo = r % sk;
        acc += m(hi + a * sk + lo, hi + b * sk + lo);
      }
      out(a, b) = acc;
    }
  return out;
}

HermitianMatrix partial_trace(const HermitianMatrix& m, const std::vector<int>& dims,
                              int keep) {
  return HermitianMatrix::hermitized(partial_trace(m.mat(), dims, keep));
}

HermitianMatrix func_calculus(const HermitianMatrix& h,
                              const std::function<double(double)>& f) {
  const EigenDecomposition ed = hermitian_eig(h);
  const int d = h.dim();
  RVec fx(d);
  for (int k = 0; k < d; ++k) {
    fx[k] = f(ed.eigenvalues[k]);
    if (!std::isfinite(fx[k]))
      throw DomainError("func_calculus: f is not finite at eigenvalue " +
                        std::to_string(ed.eigenvalues[k]));
  }
  CMat out = ed.eigenvectors * fx.asDiagonal() * ed.eigenvectors.adjoint();
  return HermitianMatrix::hermitized(out);
}

}  // namespace qflow
