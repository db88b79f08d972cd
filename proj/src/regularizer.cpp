#include "qflow/regularizer.hpp"

#include <algorithm>
#include <cmath>

namespace qflow {

namespace {

constexpr double kRootTol = 1e-12;  // |g(lambda)| stopping tolerance
constexpr int kMaxBisect = 500;
constexpr double kHuge = 1e300;  // saturation for steep inverses

// Grid of (0,1] shared by the construction-time invariant checks.
std::vector<double> check_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 60; ++i) g.push_back(std::pow(10.0, -6.0 + 0.1 * i));
  for (int i = 1; i <= 40; ++i) g.push_back(i / 40.0);
  return g;
}

}  // namespace

void validate_kernel(const RegularizerKernel& k) {
  if (std::abs(k.theta(0.0)) > 1e-12)
    throw ValidationError("kernel " + k.name + ": theta(0) must be 0");
  if (!(k.strong_convexity > 0.0))
    throw ValidationError("kernel " + k.name + ": strong_convexity must be positive");
  for (double x : check_grid()) {
    if (k.ddtheta(x) < k.strong_convexity - 1e-9)
      throw ValidationError("kernel " + k.name + ": ddtheta(" + std::to_string(x) +
                            ") dips below strong_convexity");
    if (std::abs(k.inv_dtheta(k.dtheta(x)) - x) > 1e-9)
      throw ValidationError("kernel " + k.name + ": inv_dtheta(dtheta(x)) != x at x = " +
                            std::to_string(x));
  }
  // Steepness means theta' -> -inf at 0+; probe the divergence by comparing
  // two points instead of one absolute threshold (a log divergence moves
  // slowly: theta'(1e-12) is only about -27 for x log x).
  const bool diverges = k.dtheta(1e-12) < k.dtheta(1e-6) - 1.0;
  if (diverges != k.steep)
    throw ValidationError("kernel " + k.name + ": steep flag inconsistent with dtheta");
}

RegularizerKernel euclidean_kernel() {
  RegularizerKernel k;
  k.name = "euclidean";
  k.theta = [](double x) { return 0.5 * x * x; };
  k.dtheta = [](double x) { return x; };
  k.ddtheta = [](double) { return 1.0; };
  k.inv_dtheta = [](double v) { return std::max(v, 0.0); };
  k.steep = false;
  k.strong_convexity = 1.0;
  validate_kernel(k);
  return k;
}

RegularizerKernel vonneumann_kernel() {
  RegularizerKernel k;
  k.name = "vonneumann";
  k.theta = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  k.dtheta = [](double x) { return 1.0 + std::log(x); };
  k.ddtheta = [](double x) { return 1.0 / x; };
  k.inv_dtheta = [](double v) { return std::exp(std::min(v - 1.0, 700.0)); };
  k.steep = true;
  k.strong_convexity = 1.0;
  validate_kernel(k);
  return k;
}

RegularizerKernel tsallis_kernel(double q) {
  if (!(q > 0.0) || q == 1.0 || q > 2.0)
    throw DomainError("tsallis_kernel: q must lie in (0,1) or (1,2], got " +
                      std::to_string(q));
  const double c = q * (1.0 - q);
  RegularizerKernel k;
  k.name = "tsallis:" + std::to_string(q);
  k.theta = [q, c](double x) { return x > 0.0 ? (x - std::pow(x, q)) / c : 0.0; };
  k.dtheta = [q, c](double x) { return (1.0 - q * std::pow(x, q - 1.0)) / c; };
  k.ddtheta = [q](double x) { return std::pow(x, q - 2.0); };
  // Invert 1 - q x^(q-1) = c v; base <= 0 means v left theta''s range, which
  // is x -> +inf for q < 1 and x -> 0 for q > 1.
  k.inv_dtheta = [q, c](double v) {
    const double base = (1.0 - c * v) / q;
    if (base <= 0.0) return q < 1.0 ? kHuge : 0.0;
    return std::min(std::pow(base, 1.0 / (q - 1.0)), kHuge);
  };
  k.steep = q < 1.0;
  // K = inf theta'' on [1e-14, 1], attained at x = 1 for q <= 2.
  double kmin = k.ddtheta(1.0);
  for (double x : check_grid()) kmin = std::min(kmin, k.ddtheta(x));
  k.strong_convexity = kmin;
  validate_kernel(k);
  return k;
}

RegularizerKernel make_kernel(const std::string& spec) {
  if (spec == "euclidean") return euclidean_kernel();
  if (spec == "vonneumann") return vonneumann_kernel();
  if (spec.rfind("tsallis:", 0) == 0) {
    try {
      return tsallis_kernel(std::stod(spec.substr(8)));
    } catch (const std::invalid_argument&) {
      throw ValidationError("make_kernel: bad tsallis parameter in '" + spec + "'");
    }
  }
  throw ValidationError("make_kernel: unknown kernel '" + spec + "'");
}

SimplexSolution simplex_argmax(const RegularizerKernel& k, const RVec& y) {
  const int d = static_cast<int>(y.size());
  if (d == 0) throw DimensionError("simplex_argmax: empty score vector");

  // Work on y - max(y); the shift cancels in the weights and keeps steep
  // inverses away from overflow.
  const double shift = y.maxCoeff();
  RVec ys = y.array() - shift;

  auto g = [&](double lam) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += k.inv_dtheta(ys[i] - lam);
    return s - 1.0;
  };

  double lo = ys.minCoeff() - k.dtheta(1.0);
  double hi = ys.maxCoeff() - k.dtheta(1e-6 / d);
  double glo = g(lo), ghi = g(hi);
  // g is nonincreasing; the bracket is valid analytically, but expand
  // geometrically as a guard.
  double span = std::max(hi - lo, 1.0);
  for (int i = 0; glo < 0.0 && i < 120; ++i, span *= 2.0) glo = g(lo -= span);
  for (int i = 0; ghi > 0.0 && i < 120; ++i, span *= 2.0) ghi = g(hi += span);
  if (glo < 0.0 || ghi > 0.0)
    throw ConvergenceError("simplex_argmax: could not bracket the multiplier; "
                           "kernel inverse looks inconsistent");

  double mid = 0.5 * (lo + hi), gmid = 0.0;
  for (int it = 0; it < kMaxBisect; ++it) {
    mid = 0.5 * (lo + hi);
    gmid = g(mid);
    if (std::abs(gmid) <= kRootTol) break;
    (gmid > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  if (std::abs(gmid) > 1e-6)
    throw ConvergenceError("simplex_argmax: bisection stalled at residual " +
                           std::to_string(gmid) + "; kernel is ill-conditioned");

  SimplexSolution sol;
  sol.weights = RVec(d);
  double sum = 0.0;
  for (int i = 0; i < d; ++i) sum += (sol.weights[i] = k.inv_dtheta(ys[i] - mid));
  sol.weights /= sum;  // |sum - 1| <= kRootTol already
  sol.multiplier = mid + shift;
  return sol;
}

DensityMatrix mirror(const RegularizerKernel& k, const HermitianMatrix& y) {
  const EigenDecomposition ed = hermitian_eig(y);
  const SimplexSolution sol = simplex_argmax(k, ed.eigenvalues);
  CMat x = ed.eigenvectors * sol.weights.asDiagonal() * ed.eigenvectors.adjoint();
  return DensityMatrix::trusted(HermitianMatrix::hermitized(x));
}

DensityMatrix mirror(const RegularizerKernel& k, const ScoreMatrix& y) {
  return mirror(k, y.mat);
}

double conjugate(const RegularizerKernel& k, const HermitianMatrix& y) {
  const EigenDecomposition ed = hermitian_eig(y);
  const SimplexSolution sol = simplex_argmax(k, ed.eigenvalues);
  double s = 0.0;
  for (int i = 0; i < ed.eigenvalues.size(); ++i)
    s += ed.eigenvalues[i] * sol.weights[i] - k.theta(sol.weights[i]);
  return s;
}

double conjugate(const RegularizerKernel& k, const ScoreMatrix& y) {
  return conjugate(k, y.mat);
}

double trace_theta(const RegularizerKernel& k, const DensityMatrix& p) {
  const EigenDecomposition ed = hermitian_eig(p.hermitian());
  double s = 0.0;
  for (int i = 0; i < ed.eigenvalues.size(); ++i)
    s += k.theta(std::clamp(ed.eigenvalues[i], 0.0, 1.0));
  return s;
}

double fenchel_coupling(const RegularizerKernel& k, const DensityMatrix& p,
                        const HermitianMatrix& y) {
  if (p.dim() != y.dim())
    throw DimensionError("fenchel_coupling: dimension mismatch");
  const double pairing = (p.mat() * y.mat()).trace().real();
  return trace_theta(k, p) + conjugate(k, y) - pairing;
}

double fenchel_coupling(const RegularizerKernel& k, const DensityMatrix& p,
                        const ScoreMatrix& y) {
  return fenchel_coupling(k, p, y.mat);
}

}  // namespace qflow
