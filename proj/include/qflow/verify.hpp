#pragma once

#include <cstdint>
#include <random>

#include "qflow/analysis.hpp"

namespace qflow {

/* Built-in cross-check suite: every module's property checks plus the
 * independent numeric oracles they arbitrate against.  The oracles here
 * deliberately avoid the code paths they judge (sorted projection instead
 * of simplex_argmax, quadrature instead of closed forms, finite differences
 * instead of adjoint formulas). */

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  double tol_scale = 1.0;  // 10.0 for the reduced-tolerance mode
};

std::vector<CheckResult> run_verification(const VerifyOptions& opts = {});

// Deterministic generators shared by checks and tests.
HermitianMatrix random_hermitian(std::mt19937_64& rng, int d, double scale);
HermitianMatrix random_traceless(std::mt19937_64& rng, int d, double scale);
// Full-rank state: normalized Wishart blended with I/d by `interior_mix`.
DensityMatrix random_density(std::mt19937_64& rng, int d, double interior_mix);
/* Classical tables with uniform [-1,1] entries lifted to the computational
 * basis, then conjugated by a Haar-ish joint unitary so the POVM is no
 * longer diagonal.  zero_sum makes player 2's table the negation (two
 * players only). */
QuantumGame random_lifted_game(std::mt19937_64& rng, const std::vector<int>& dims,
                               bool zero_sum);

// Two-player reference games on classical lifts.
QuantumGame dominance_game();         // [[2,1],[-2,-1]] vs its negation
QuantumGame matching_pennies_game();  // [[1,-1],[-1,1]] vs its negation

/* Euclidean projection onto density matrices via the sorted active-set
 * simplex rule on the spectrum; independent of simplex_argmax. */
DensityMatrix spectraplex_project(const HermitianMatrix& m);

struct PgaResult {
  DensityMatrix state;
  double objective = 0.0;
};

double mirror_objective(const RegularizerKernel& k, const HermitianMatrix& y,
                        const DensityMatrix& x);
// Brute-force maximizer of tr(YX) - tr theta(X) by projected gradient
// ascent with adaptive step, best of `restarts` random starts.
PgaResult pga_mirror(const RegularizerKernel& k, const HermitianMatrix& y, int restarts,
                     std::uint64_t seed);

// 32-node Gauss-Legendre value of int_0^1 X^{1-s} V X^s ds - tr(XV) X.
HermitianMatrix qrd_integral_oracle(const DensityMatrix& x, const HermitianMatrix& v);

/* Central finite-difference divergence of the quotient score field in the
 * traceless chart (per player: d-1 free diagonal entries plus off-diagonal
 * re/im), together with the field's norm at the point. */
struct DivergenceSample {
  double divergence = 0.0;
  double field_norm = 0.0;
};
DivergenceSample quotient_divergence_fd(const QuantumGame& g,
                                        const std::vector<RegularizerKernel>& kernels,
                                        const std::vector<HermitianMatrix>& z, double h);

}  // namespace qflow
