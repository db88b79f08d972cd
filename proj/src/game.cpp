#include "qflow/game.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

namespace qflow {

namespace {

constexpr double kPsdTol = -1e-10;       // outcome operator min eigenvalue
constexpr double kCompletenessTol = 1e-10;  // ||sum P - I||_F
constexpr double kImagTol = 1e-10;       // payoff imaginary residue

// Joint operator sigma_1 (x) ... (x) sigma_N.
CMat tensor_chain(const std::vector<CMat>& factors) {
  CMat acc = factors.front();
  for (size_t j = 1; j < factors.size(); ++j) acc = tensor_product(acc, factors[j]);
  return acc;
}

}  // namespace

int QuantumGame::joint_dim() const {
  return std::accumulate(dims_.begin(), dims_.end(), 1, std::multiplies<int>());
}

const HermitianMatrix& QuantumGame::payoff_aggregate(int player) const {
  if (player < 0 || player >= num_players())
    throw DimensionError("payoff_aggregate: player index out of range");
  return aggregates_[player];
}

QuantumGame QuantumGame::from_outcomes(std::vector<int> player_dims,
                                       std::vector<PovmOutcome> outcomes,
                                       bool zero_sum) {
  if (player_dims.empty()) throw ValidationError("player_dims: must be nonempty");
  for (int d : player_dims)
    if (d < 1) throw ValidationError("player_dims: dims must be >= 1");
  if (outcomes.empty()) throw ValidationError("outcomes: must be nonempty");

  const int n = static_cast<int>(player_dims.size());
  Eigen::Index joint = 1;
  for (int d : player_dims) joint *= d;

  CMat sum = CMat::Zero(joint, joint);
  for (size_t w = 0; w < outcomes.size(); ++w) {
    const PovmOutcome& o = outcomes[w];
    if (o.op.dim() != joint)
      throw ValidationError("outcomes[" + std::to_string(w) + "].operator: dim " +
                            std::to_string(o.op.dim()) + " does not match joint dim " +
                            std::to_string(joint));
    if (static_cast<int>(o.payoffs.size()) != n)
      throw ValidationError("outcomes[" + std::to_string(w) +
                            "].payoffs: need one entry per player");
    Eigen::SelfAdjointEigenSolver<CMat> es(o.op.mat(), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdTol)
      throw ValidationError("outcomes[" + std::to_string(w) + "].operator: min eigenvalue " +
                            std::to_string(es.eigenvalues().minCoeff()));
    sum += o.op.mat();
  }
  const double gap = (sum - CMat::Identity(joint, joint)).norm();
  if (gap > kCompletenessTol)
    throw ValidationError("outcomes: POVM completeness defect ||sum P - I||_F = " +
                          std::to_string(gap));

  QuantumGame g;
  g.dims_ = std::move(player_dims);
  g.outcomes_ = std::move(outcomes);
  g.zero_sum_ = zero_sum;
  for (int i = 0; i < n; ++i) {
    CMat wi = CMat::Zero(joint, joint);
    for (const PovmOutcome& o : g.outcomes_) wi += o.payoffs[i] * o.op.mat();
    g.aggregates_.push_back(HermitianMatrix::hermitized(wi));
  }
  return g;
}

QuantumGame QuantumGame::from_classical(const std::vector<ClassicalTable>& tables) {
  if (tables.empty()) throw ValidationError("classical_tables: must be nonempty");
  const std::vector<int>& shape = tables.front().shape;
  const int n = static_cast<int>(tables.size());
  if (static_cast<int>(shape.size()) != n)
    throw ValidationError("classical_tables: table rank " + std::to_string(shape.size()) +
                          " does not match player count " + std::to_string(n));
  Eigen::Index joint = 1;
  for (int d : shape) {
    if (d < 1) throw ValidationError("classical_tables: shape entries must be >= 1");
    joint *= d;
  }
  for (size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].shape != shape)
      throw ValidationError("classical_tables[" + std::to_string(i) +
                            "]: shape differs from player 0's");
    if (static_cast<Eigen::Index>(tables[i].values.size()) != joint)
      throw ValidationError("classical_tables[" + std::to_string(i) +
                            "]: value count does not match shape");
  }

  // One diagonal rank-1 projector |a_1...a_N><a_1...a_N| per joint action;
  // row-major flattening matches the tensor index convention.
  std::vector<PovmOutcome> outcomes;
  bool zero_sum = true;
  for (Eigen::Index idx = 0; idx < joint; ++idx) {
    CMat p = CMat::Zero(joint, joint);
    p(idx, idx) = 1.0;
    PovmOutcome o{HermitianMatrix::hermitized(p), {}, {}};
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      o.payoffs.push_back(tables[i].values[idx]);
      total += tables[i].values[idx];
    }
    if (total != 0.0) zero_sum = false;
    // Label by the joint action multi-index, e.g. "1,0".
    Eigen::Index rem = idx;
    for (int kk = n - 1; kk >= 0; --kk) {
      o.label = std::to_string(rem % shape[kk]) + (kk == n - 1 ? "" : "," + o.label);
      rem /= shape[kk];
    }
    outcomes.push_back(std::move(o));
  }
  std::vector<int> dims(shape.begin(), shape.end());
  return from_outcomes(std::move(dims), std::move(outcomes), zero_sum);
}

double payoff(const QuantumGame& g, int player, const StateProfile& rho) {
  if (static_cast<int>(rho.states.size()) != g.num_players())
    throw DimensionError("payoff: profile has wrong player count");
  std::vector<CMat> factors;
  for (int j = 0; j < g.num_players(); ++j) {
    if (rho.states[j].dim() != g.player_dims()[j])
      throw DimensionError("payoff: state dim mismatch for player " + std::to_string(j));
    factors.push_back(rho.states[j].mat());
  }
  const Cx val = (tensor_chain(factors) * g.payoff_aggregate(player).mat()).trace();
  if (std::abs(val.imag()) > kImagTol)
    throw ValidationError("payoff: imaginary residue " + std::to_string(val.imag()));
  return val.real();
}

std::vector<HermitianMatrix> gradient_fields_raw(const QuantumGame& g,
                                                 const std::vector<CMat>& states) {
  const int n = g.num_players();
  if (static_cast<int>(states.size()) != n)
    throw DimensionError("gradient_fields: profile has wrong player count");
  std::vector<HermitianMatrix> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    // tr[(rho_1 (x) .. X_i .. (x) rho_N) W_i] = tr_i[X_i V_i] with
    // V_i = PT_i[(rho_1 (x) .. I_i .. (x) rho_N) W_i]; slot i is identity,
    // so the result cannot depend on states[i].
    std::vector<CMat> factors;
    for (int j = 0; j < n; ++j) {
      const int dj = g.player_dims()[j];
      if (states[j].rows() != dj || states[j].cols() != dj)
        throw DimensionError("gradient_fields: state dim mismatch for player " +
                             std::to_string(j));
      factors.push_back(j == i ? CMat::Identity(dj, dj) : states[j]);
    }
    const CMat contracted = tensor_chain(factors) * g.payoff_aggregate(i).mat();
    out.push_back(HermitianMatrix::hermitized(
        partial_trace(contracted, g.player_dims(), i)));
  }
  return out;
}

HermitianMatrix gradient_field(const QuantumGame& g, int player, const StateProfile& rho) {
  if (player < 0 || player >= g.num_players())
    throw DimensionError("gradient_field: player index out of range");
  std::vector<CMat> mats;
  for (const DensityMatrix& s : rho.states) mats.push_back(s.mat());
  return gradient_fields_raw(g, mats)[player];
}

std::vector<HermitianMatrix> gradient_fields(const QuantumGame& g, const StateProfile& rho) {
  std::vector<CMat> mats;
  for (const DensityMatrix& s : rho.states) mats.push_back(s.mat());
  return gradient_fields_raw(g, mats);
}

std::vector<double> outcome_probabilities(const QuantumGame& g, const StateProfile& rho) {
  if (static_cast<int>(rho.states.size()) != g.num_players())
    throw DimensionError("outcome_probabilities: profile has wrong player count");
  std::vector<CMat> factors;
  for (const DensityMatrix& s : rho.states) factors.push_back(s.mat());
  const CMat joint = tensor_chain(factors);
  std::vector<double> probs;
  for (const PovmOutcome& o : g.outcomes())
    probs.push_back((joint * o.op.mat()).trace().real());
  return probs;
}

double exploitability(const QuantumGame& g, const StateProfile& rho) {
  const std::vector<HermitianMatrix> v = gradient_fields(g, rho);
  double total = 0.0;
  for (int i = 0; i < g.num_players(); ++i) {
    Eigen::SelfAdjointEigenSolver<CMat> es(v[i].mat(), Eigen::EigenvaluesOnly);
    const double best = es.eigenvalues().maxCoeff();
    const double current = (rho.states[i].mat() * v[i].mat()).trace().real();
    total += best - current;
  }
  return total;
}

}  // namespace qflow
