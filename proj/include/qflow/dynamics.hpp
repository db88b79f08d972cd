#pragma once

#include "qflow/game.hpp"
#include "qflow/regularizer.hpp"

namespace qflow {

enum class FlowSpace { dual, primal, quotient };

/* ODE driver selection.  rk4_fixed subdivides each record interval into
 * equal steps no longer than `step`; dopri45 is the adaptive
 * Dormand-Prince 4(5) pair with per-component error control
 * atol + rtol * |y|. */
struct IntegratorSpec {
  enum class Kind { rk4_fixed, dopri45 } kind = Kind::dopri45;
  double step = 1e-3;   // rk4_fixed
  double rtol = 1e-9;   // dopri45
  double atol = 1e-11;  // dopri45
};

/* Full description of one run.  Exactly one of initial_scores /
 * initial_states is nonempty; scores seed dual or quotient space directly,
 * states are pushed through theta' (dual) or the identity (primal). */
struct SimulationConfig {
  std::vector<RegularizerKernel> kernels;  // one per player
  double horizon = 0.0;
  IntegratorSpec integrator;
  double record_stride = 0.01;
  FlowSpace space = FlowSpace::dual;
  std::vector<HermitianMatrix> initial_scores;
  std::vector<DensityMatrix> initial_states;
};

/* Recorded run: times are strictly increasing and include 0 and the
 * horizon; states[t][i] is player i's density matrix, gradients[t][i] the
 * payoff gradient there.  dual_scores is empty for primal-space runs. */
struct Trajectory {
  FlowSpace space = FlowSpace::dual;
  std::vector<double> times;
  std::vector<std::vector<ScoreMatrix>> dual_scores;
  std::vector<std::vector<DensityMatrix>> states;
  std::vector<std::vector<HermitianMatrix>> gradients;
};

// Score-space field: dY_i/dt = V_i(Q_1(Y_1), ..., Q_N(Y_N)).
std::vector<HermitianMatrix> dual_field(const QuantumGame& g,
                                        const std::vector<RegularizerKernel>& kernels,
                                        const std::vector<ScoreMatrix>& y);

/* Traceless reduction of the score field: dZ_i/dt = V_i(Q(Z)) -
 * (tr V_i / d_i) I.  Inputs must be traceless to 1e-10; outputs are
 * traceless to 1e-12 by construction. */
std::vector<HermitianMatrix> quotient_field(const QuantumGame& g,
                                            const std::vector<RegularizerKernel>& kernels,
                                            const std::vector<ScoreMatrix>& z);

/* State-space field induced by the mirror map: in the eigenbasis of X
 * (V~ = U^dagger V U, eigenvalues floored at 1e-14),
 *   diag:     V~_kk / theta''(x_k) - [sum_l V~_ll/theta''(x_l)] /
 *             [theta''(x_k) sum_l 1/theta''(x_l)]
 *   off-diag: (x_l - x_k)/(theta'(x_l) - theta'(x_k)) * V~_kl,
 * with the ratio continued as 1/theta''((x_k+x_l)/2) at coincident
 * eigenvalues.  Hermitian and traceless. */
HermitianMatrix qd_field(const RegularizerKernel& k, const DensityMatrix& x,
                         const HermitianMatrix& v);

/* von Neumann specialization (matrix replicator): diag x_k(V~_kk -
 * sum_l x_l V~_ll), off-diag (x_l - x_k)/(log x_l - log x_k) V~_kl. */
HermitianMatrix qrd_field(const DensityMatrix& x, const HermitianMatrix& v);

Trajectory integrate(const QuantumGame& g, const SimulationConfig& cfg);

}  // namespace qflow
