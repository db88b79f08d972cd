#pragma once

#include <string>
#include <vector>

#include "qflow/matrix.hpp"

namespace qflow {

/* One measurement outcome: PSD operator on the joint space plus the payoff
 * each player receives when it fires. */
struct PovmOutcome {
  HermitianMatrix op;
  std::vector<double> payoffs;  // one entry per player
  std::string label;
};

// Per-player classical payoff table over joint actions, row-major over the
// shared shape (a_1, ..., a_N).
struct ClassicalTable {
  std::vector<int> shape;
  std::vector<double> values;
};

/* N-player quantum game: player i plays a density matrix on factor i of the
 * joint tensor space (factors ordered by player index).  Construction checks
 * each outcome operator is PSD (min eigenvalue >= -1e-10) and the POVM is
 * complete (||sum P - I||_F <= 1e-10), and caches the payoff aggregates
 * W_i = sum_w w_i(w) P_w. */
class QuantumGame {
 public:
  static QuantumGame from_outcomes(std::vector<int> player_dims,
                                   std::vector<PovmOutcome> outcomes, bool zero_sum);
  /* Computational-basis lift of a classical game: one rank-1 diagonal
   * projector per joint action.  Tables must share a common shape, one
   * table per player; zero-sum is flagged when payoffs cancel exactly. */
  static QuantumGame from_classical(const std::vector<ClassicalTable>& tables);

  int num_players() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& player_dims() const { return dims_; }
  int joint_dim() const;
  const std::vector<PovmOutcome>& outcomes() const { return outcomes_; }
  const HermitianMatrix& payoff_aggregate(int player) const;
  bool zero_sum() const { return zero_sum_; }

 private:
  QuantumGame() = default;
  std::vector<int> dims_;
  std::vector<PovmOutcome> outcomes_;
  std::vector<HermitianMatrix> aggregates_;
  bool zero_sum_ = false;
};

// One density matrix per player, matching the game's dims.
struct StateProfile {
  std::vector<DensityMatrix> states;
};

// Expected payoff u_i(rho) = tr[(rho_1 (x) ... (x) rho_N) W_i]; the
// imaginary residue is checked against 1e-10 and discarded.
double payoff(const QuantumGame& g, int player, const StateProfile& rho);

/* Individual payoff gradient V_i(rho): the unique Hermitian matrix with
 * u_i(X; rho_{-i}) = tr(X V_i) for every X on factor i.  Computed by
 * contracting W_i against the other players' states and partial-tracing
 * onto factor i; never reads rho_i. */
HermitianMatrix gradient_field(const QuantumGame& g, int player, const StateProfile& rho);
std::vector<HermitianMatrix> gradient_fields(const QuantumGame& g, const StateProfile& rho);

// Internal-friendly variant on raw matrices (no density validation); used by
// the ODE drivers whose intermediate states carry integrator roundoff.
std::vector<HermitianMatrix> gradient_fields_raw(const QuantumGame& g,
                                                 const std::vector<CMat>& states);

// Outcome firing probabilities tr[(rho_1 (x) ... (x) rho_N) P_w].
std::vector<double> outcome_probabilities(const QuantumGame& g, const StateProfile& rho);

/* sum_i [lambda_max(V_i) - tr(rho_i V_i)]: each player's best unilateral
 * improvement; zero exactly at Nash equilibria. */
double exploitability(const QuantumGame& g, const StateProfile& rho);

}  // namespace qflow
