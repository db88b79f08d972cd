#pragma once

#include <string>

#include "qflow/matrix.hpp"

namespace qflow {

/* Scalar kernel theta of a trace regularizer h(X) = tr theta(X), strictly
 * convex on [0,1].  `steep` records whether theta'(x) -> -inf as x -> 0+
 * (which keeps mirror outputs full rank); `strong_convexity` is a lower
 * bound K on theta'' over (0,1], so h is K-strongly convex in Frobenius
 * norm and the mirror map is (1/K)-Lipschitz. */
struct RegularizerKernel {
  std::string name;
  std::function<double(double)> theta;
  std::function<double(double)> dtheta;
  std::function<double(double)> ddtheta;
  std::function<double(double)> inv_dtheta;  // inverse of dtheta; clips to 0
                                             // below range for non-steep kernels
  bool steep = false;
  double strong_convexity = 0.0;
};

// Eigenvalues below this are floored before theta'/theta'' are evaluated.
constexpr double kEigFloor = 1e-14;

RegularizerKernel euclidean_kernel();   // theta(x) = x^2/2
RegularizerKernel vonneumann_kernel();  // theta(x) = x log x
RegularizerKernel tsallis_kernel(double q);  // (x - x^q)/(q(1-q)), q in (0,1)u(1,2]

// Parses "euclidean" | "vonneumann" | "tsallis:<q>".
RegularizerKernel make_kernel(const std::string& spec);

// Construction-time invariant check (theta(0)=0, theta'' >= K on a grid,
// inv_dtheta round-trip, steep flag consistency).  Factories call this.
void validate_kernel(const RegularizerKernel& k);

/* Dual score matrix.  `traceless` tags scores living in the traceless
 * quotient chart; the mirror map treats both identically. */
struct ScoreMatrix {
  HermitianMatrix mat;
  bool traceless = false;
};

inline ScoreMatrix make_score(HermitianMatrix m) { return ScoreMatrix{std::move(m), false}; }

/* argmax over the probability simplex of sum_k y_k x_k - theta(x_k).
 * Solved by monotone bisection on g(lambda) = sum_k clip(inv_dtheta(y_k -
 * lambda)) - 1; `multiplier` is the KKT lambda, so theta'(x_k) = y_k -
 * lambda on the support. */
struct SimplexSolution {
  RVec weights;       // on the simplex: >= 0, sums to 1 within 1e-10
  double multiplier;  // KKT lambda
};

SimplexSolution simplex_argmax(const RegularizerKernel& k, const RVec& y);

/* Mirror map Q(Y): argmax over density matrices of tr(YX) - tr theta(X).
 * Shares Y's eigenbasis; reduces to simplex_argmax on Y's spectrum. */
DensityMatrix mirror(const RegularizerKernel& k, const ScoreMatrix& y);
DensityMatrix mirror(const RegularizerKernel& k, const HermitianMatrix& y);

// Convex conjugate h*(Y) = tr(Y Q(Y)) - tr theta(Q(Y)).
double conjugate(const RegularizerKernel& k, const ScoreMatrix& y);
double conjugate(const RegularizerKernel& k, const HermitianMatrix& y);

// h(P) = tr theta(P), via P's spectrum (theta extends continuously to 0).
double trace_theta(const RegularizerKernel& k, const DensityMatrix& p);

/* Fenchel coupling F(P, Y) = tr theta(P) + h*(Y) - tr(PY); nonnegative,
 * zero iff P = Q(Y), and >= (K/2) ||Q(Y) - P||_F^2. */
double fenchel_coupling(const RegularizerKernel& k, const DensityMatrix& p,
                        const ScoreMatrix& y);
double fenchel_coupling(const RegularizerKernel& k, const DensityMatrix& p,
                        const HermitianMatrix& y);

}  // namespace qflow
