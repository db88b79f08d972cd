#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qflow/game.hpp"
#include "qflow/matrix.hpp"
#include "qflow/verify.hpp"

using namespace qflow;

namespace {

CMat diag_mat(const std::vector<double>& v) {
  CMat m = CMat::Zero(v.size(), v.size());
  for (size_t k = 0; k < v.size(); ++k) m(k, k) = v[k];
  return m;
}

StateProfile profile(const DensityMatrix& a, const DensityMatrix& b) {
  return StateProfile{{a, b}};
}

// Two-player game with a single all-pass outcome paying c to everyone.
QuantumGame constant_game(double c) {
  PovmOutcome o{HermitianMatrix::identity(4), {c, c}, "always"};
  return QuantumGame::from_outcomes({2, 2}, {o}, false);
}

// Bilinear expansion over diagonal entries; valid for computational-basis
// lifts, where off-diagonal state entries never touch the payoff.
double classical_payoff(const std::vector<std::vector<double>>& table,
                        const DensityMatrix& x, const DensityMatrix& y) {
  double u = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      u += x.mat()(a, a).real() * y.mat()(b, b).real() * table[a][b];
  return u;
}

// Row contraction of the classical table against the opponent's diagonal.
CMat classical_gradient(const std::vector<std::vector<double>>& table,
                        const DensityMatrix& opponent) {
  CMat v = CMat::Zero(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) v(a, a) += opponent.mat()(b, b).real() * table[a][b];
  return v;
}

const std::vector<std::vector<double>> kDominanceTable{{2, 1}, {-2, -1}};
const std::vector<std::vector<double>> kPenniesTable{{1, -1}, {-1, 1}};

}  // namespace

TEST_CASE("single all-pass outcome pays its constant at every profile") {
  const QuantumGame g = constant_game(0.7);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const StateProfile p = profile(random_density(rng, 2, 0.3), random_density(rng, 2, 0.3));
    CHECK(payoff(g, 0, p) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(payoff(g, 1, p) == doctest::Approx(0.7).epsilon(1e-12));
  }
}

TEST_CASE("lifted dominance game scores pure computational profiles from the table") {
  const QuantumGame g = dominance_game();
  const StateProfile p = profile(DensityMatrix::diagonal({1, 0}), DensityMatrix::diagonal({0, 1}));
  CHECK(payoff(g, 0, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(payoff(g, 1, p) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("lifted dominance game matches the bilinear expansion on mixed profiles") {
  const QuantumGame g = dominance_game();
  const DensityMatrix x = DensityMatrix::diagonal({0.2, 0.8});
  const DensityMatrix y = DensityMatrix::diagonal({0.8, 0.2});
  const double expected = classical_payoff(kDominanceTable, x, y);
  CHECK(expected == doctest::Approx(-1.08).epsilon(1e-12));
  CHECK(payoff(g, 0, profile(x, y)) == doctest::Approx(expected).epsilon(1e-12));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix a = random_density(rng, 2, 0.2);
    const DensityMatrix b = random_density(rng, 2, 0.2);
    CHECK(payoff(g, 0, profile(a, b)) ==
          doctest::Approx(classical_payoff(kDominanceTable, a, b)).epsilon(1e-10));
  }
}

TEST_CASE("payoff is linear in each player's state") {
  const QuantumGame g = dominance_game();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix x1 = random_density(rng, 2, 0.2);
    const DensityMatrix x2 = random_density(rng, 2, 0.2);
    const DensityMatrix other = random_density(rng, 2, 0.2);
    const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const DensityMatrix blend = DensityMatrix::from(
        HermitianMatrix::hermitized(alpha * x1.mat() + (1.0 - alpha) * x2.mat()));
    const double lhs = payoff(g, 0, profile(blend, other));
    const double rhs = alpha * payoff(g, 0, profile(x1, other)) +
                       (1.0 - alpha) * payoff(g, 0, profile(x2, other));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("gradient of the all-pass game is the constant times identity") {
  const QuantumGame g = constant_game(-1.3);
  std::mt19937_64 rng(11);
  const StateProfile p = profile(random_density(rng, 2, 0.3), random_density(rng, 2, 0.3));
  for (int i = 0; i < 2; ++i)
    CHECK(fnorm(gradient_field(g, i, p).mat() + 1.3 * CMat::Identity(2, 2)) <= 1e-12);
}

TEST_CASE("matching pennies gradient vanishes against the uniform opponent") {
  const QuantumGame g = matching_pennies_game();
  const StateProfile p = profile(DensityMatrix::uniform(2), DensityMatrix::uniform(2));
  CHECK(fnorm(gradient_field(g, 0, p).mat()) <= 1e-12);
  CHECK(fnorm(gradient_field(g, 1, p).mat()) <= 1e-12);
}

TEST_CASE("dominance gradient contracts the table against the opponent state") {
  const QuantumGame g = dominance_game();
  const DensityMatrix y = DensityMatrix::diagonal({0.8, 0.2});
  const HermitianMatrix v = gradient_field(g, 0, profile(DensityMatrix::uniform(2), y));
  CHECK(fnorm(v.mat() - diag_mat({1.8, -1.8})) <= 1e-12);
  CHECK(fnorm(v.mat() - classical_gradient(kDominanceTable, y)) <= 1e-12);
}

TEST_CASE("payoffs decompose through the gradient trace identity") {
  const QuantumGame g = dominance_game();
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const StateProfile p = profile(random_density(rng, 2, 0.2), random_density(rng, 2, 0.2));
    for (int i = 0; i < 2; ++i) {
      const HermitianMatrix v = gradient_field(g, i, p);
      const double via_trace = (p.states[i].mat() * v.mat()).trace().real();
      CHECK(payoff(g, i, p) == doctest::Approx(via_trace).epsilon(1e-10));
    }
  }
}

TEST_CASE("gradient matches central differences of the payoff") {
  std::mt19937_64 rng(17);
  const QuantumGame g = random_lifted_game(rng, {2, 3}, false);
  const double h = 1e-4;
  for (int trial = 0; trial < 5; ++trial) {
    StateProfile p = profile(random_density(rng, 2, 0.4), random_density(rng, 3, 0.4));
    for (int i = 0; i < 2; ++i) {
      const int d = p.states[i].dim();
      const HermitianMatrix dir = random_traceless(rng, d, 1.0);
      StateProfile up = p, dn = p;
      up.states[i] = DensityMatrix::from(
          HermitianMatrix::hermitized(p.states[i].mat() + h * dir.mat()));
      dn.states[i] = DensityMatrix::from(
          HermitianMatrix::hermitized(p.states[i].mat() - h * dir.mat()));
      const double fd = (payoff(g, i, up) - payoff(g, i, dn)) / (2.0 * h);
      const double via_v =
          (dir.mat() * gradient_field(g, i, p).mat()).trace().real();
      CHECK(std::abs(fd - via_v) <= 1e-6);
    }
  }
}

TEST_CASE("gradient never reads the player's own state") {
  std::mt19937_64 rng(19);
  const QuantumGame g = random_lifted_game(rng, {3, 2}, false);
  const DensityMatrix other = random_density(rng, 2, 0.3);
  const HermitianMatrix va =
      gradient_field(g, 0, profile(random_density(rng, 3, 0.3), other));
  const HermitianMatrix vb =
      gradient_field(g, 0, profile(random_density(rng, 3, 0.3), other));
  CHECK(fnorm(va.mat() - vb.mat()) == 0.0);
}

TEST_CASE("outcome probabilities form a distribution") {
  const QuantumGame g = dominance_game();
  const StateProfile p =
      profile(DensityMatrix::diagonal({0.2, 0.8}), DensityMatrix::diagonal({0.8, 0.2}));
  std::vector<double> probs = outcome_probabilities(g, p);
  double total = 0.0;
  for (double v : probs) {
    CHECK(v >= -1e-10);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  // Product distribution over joint actions: {0.16, 0.04, 0.64, 0.16}.
  std::sort(probs.begin(), probs.end());
  const std::vector<double> expected{0.04, 0.16, 0.16, 0.64};
  for (size_t k = 0; k < expected.size(); ++k)
    CHECK(probs[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("declared zero-sum games cancel payoffs at random profiles") {
  const QuantumGame g = dominance_game();
  CHECK(g.zero_sum());
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const StateProfile p = profile(random_density(rng, 2, 0.2), random_density(rng, 2, 0.2));
    CHECK(std::abs(payoff(g, 0, p) + payoff(g, 1, p)) <= 1e-10);
  }
}

TEST_CASE("exploitability vanishes exactly at equilibria") {
  const QuantumGame mp = matching_pennies_game();
  CHECK(exploitability(mp, profile(DensityMatrix::uniform(2), DensityMatrix::uniform(2))) <=
        1e-8);
  const QuantumGame dg = dominance_game();
  CHECK(exploitability(dg, profile(DensityMatrix::diagonal({1, 0}),
                                   DensityMatrix::diagonal({0, 1}))) <= 1e-8);
}

TEST_CASE("exploitability is positive away from equilibrium") {
  const QuantumGame g = dominance_game();
  const double gap =
      exploitability(g, profile(DensityMatrix::uniform(2), DensityMatrix::uniform(2)));
  // Player 1's best response against the uniform opponent gains 1.5.
  CHECK(gap == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("single-action classical game is constant") {
  ClassicalTable t{{1}, {0.42}};
  const QuantumGame g = QuantumGame::from_classical({t});
  const StateProfile p{{DensityMatrix::diagonal({1.0})}};
  CHECK(payoff(g, 0, p) == doctest::Approx(0.42).epsilon(1e-14));
}

TEST_CASE("classical lift of the dominance game has one outcome per joint action") {
  const QuantumGame g = dominance_game();
  CHECK(g.num_players() == 2);
  CHECK(g.outcomes().size() == 4);
  CHECK(g.joint_dim() == 4);
  // Completeness: the four projectors resolve the identity.
  CMat sum = CMat::Zero(4, 4);
  for (const PovmOutcome& o : g.outcomes()) sum += o.op.mat();
  CHECK(fnorm(sum - CMat::Identity(4, 4)) <= 1e-12);
}

TEST_CASE("classical tables with mismatched shapes are rejected") {
  ClassicalTable a{{2, 2}, {1, -1, -1, 1}};
  ClassicalTable b{{2, 3}, {1, -1, 0, -1, 1, 0}};
  CHECK_THROWS_AS(QuantumGame::from_classical({a, b}), ValidationError);
}

TEST_CASE("povm construction rejects incomplete or indefinite outcome sets") {
  // Two half-identities complete the POVM; one alone does not.
  PovmOutcome half{HermitianMatrix::hermitized(0.5 * CMat::Identity(4, 4)), {1, -1}, ""};
  CHECK_THROWS_AS(QuantumGame::from_outcomes({2, 2}, {half}, false), ValidationError);

  CMat indef = CMat::Identity(4, 4) * 1.5;
  indef(3, 3) = -0.5;
  PovmOutcome bad{HermitianMatrix::hermitized(indef), {1, -1}, ""};
  PovmOutcome rest{
      HermitianMatrix::hermitized(CMat::Identity(4, 4) - indef), {0, 0}, ""};
  CHECK_THROWS_AS(QuantumGame::from_outcomes({2, 2}, {bad, rest}, false), ValidationError);
}

TEST_CASE("profile shape errors are reported as dimension mismatches") {
  const QuantumGame g = dominance_game();
  StateProfile short_profile{{DensityMatrix::uniform(2)}};
  CHECK_THROWS_AS(payoff(g, 0, short_profile), DimensionError);
  StateProfile wrong_dim = profile(DensityMatrix::uniform(3), DensityMatrix::uniform(2));
  CHECK_THROWS_AS(gradient_field(g, 0, wrong_dim), DimensionError);
}
