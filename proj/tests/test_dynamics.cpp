#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qflow/dynamics.hpp"
#include "qflow/matrix.hpp"
#include "qflow/verify.hpp"

using namespace qflow;

namespace {

CMat diag_mat(const std::vector<double>& v) {
  CMat m = CMat::Zero(v.size(), v.size());
  for (size_t k = 0; k < v.size(); ++k) m(k, k) = v[k];
  return m;
}

QuantumGame constant_game(double c) {
  PovmOutcome o{HermitianMatrix::identity(4), {c, c}, "always"};
  return QuantumGame::from_outcomes({2, 2}, {o}, false);
}

std::vector<RegularizerKernel> vn_pair() {
  return {vonneumann_kernel(), vonneumann_kernel()};
}

std::vector<ScoreMatrix> scores(const std::vector<HermitianMatrix>& ms) {
  std::vector<ScoreMatrix> out;
  for (const HermitianMatrix& m : ms) out.push_back(make_score(m));
  return out;
}

SimulationConfig base_config(double horizon) {
  SimulationConfig cfg;
  cfg.kernels = vn_pair();
  cfg.horizon = horizon;
  cfg.record_stride = 0.05;
  cfg.space = FlowSpace::dual;
  return cfg;
}

// Classical replicator rule on the shared eigenbasis of diagonal inputs.
CMat replicator_diag(const std::vector<double>& x, const std::vector<double>& v) {
  double mean = 0.0;
  for (size_t k = 0; k < x.size(); ++k) mean += x[k] * v[k];
  CMat out = CMat::Zero(x.size(), x.size());
  for (size_t k = 0; k < x.size(); ++k) out(k, k) = x[k] * (v[k] - mean);
  return out;
}

double profile_distance(const std::vector<DensityMatrix>& a,
                        const std::vector<DensityMatrix>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::pow(fnorm(a[i].mat() - b[i].mat()), 2);
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("dual field of the all-pass game is the constant regardless of scores") {
  const QuantumGame g = constant_game(0.9);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const std::vector<ScoreMatrix> y =
        scores({random_hermitian(rng, 2, 2.0), random_hermitian(rng, 2, 2.0)});
    const std::vector<HermitianMatrix> f = dual_field(g, vn_pair(), y);
    for (const HermitianMatrix& v : f)
      CHECK(fnorm(v.mat() - 0.9 * CMat::Identity(2, 2)) <= 1e-12);
  }
}

TEST_CASE("dual field at zero scores evaluates the gradient at the uniform profile") {
  const QuantumGame g = dominance_game();
  const std::vector<ScoreMatrix> y0 =
      scores({HermitianMatrix::zero(2), HermitianMatrix::zero(2)});
  const std::vector<HermitianMatrix> f = dual_field(g, vn_pair(), y0);
  const StateProfile uniform{{DensityMatrix::uniform(2), DensityMatrix::uniform(2)}};
  for (int i = 0; i < 2; ++i)
    CHECK(fnorm(f[i].mat() - gradient_field(g, i, uniform).mat()) <= 1e-12);
}

TEST_CASE("dual field of matching pennies vanishes at zero scores") {
  const QuantumGame g = matching_pennies_game();
  const std::vector<HermitianMatrix> f = dual_field(
      g, vn_pair(), scores({HermitianMatrix::zero(2), HermitianMatrix::zero(2)}));
  CHECK(fnorm(f[0].mat()) <= 1e-12);
  CHECK(fnorm(f[1].mat()) <= 1e-12);
}

TEST_CASE("quotient field of the all-pass game is identically zero") {
  const QuantumGame g = constant_game(2.0);
  std::mt19937_64 rng(5);
  const std::vector<ScoreMatrix> z =
      scores({random_traceless(rng, 2, 1.0), random_traceless(rng, 2, 1.0)});
  for (const HermitianMatrix& v : quotient_field(g, vn_pair(), z))
    CHECK(fnorm(v.mat()) <= 1e-12);
}

TEST_CASE("quotient field equals the dual field when gradients are traceless") {
  // Matching-pennies columns sum to zero, so V is traceless at every profile.
  const QuantumGame g = matching_pennies_game();
  std::mt19937_64 rng(7);
  const std::vector<ScoreMatrix> z =
      scores({random_traceless(rng, 2, 1.0), random_traceless(rng, 2, 1.0)});
  const std::vector<HermitianMatrix> qf = quotient_field(g, vn_pair(), z);
  const std::vector<HermitianMatrix> df = dual_field(g, vn_pair(), z);
  for (int i = 0; i < 2; ++i) CHECK(fnorm(qf[i].mat() - df[i].mat()) <= 1e-12);
}

TEST_CASE("quotient field removes exactly the trace component") {
  const QuantumGame g = dominance_game();
  const std::vector<ScoreMatrix> z0 =
      scores({HermitianMatrix::zero(2), HermitianMatrix::zero(2)});
  const std::vector<HermitianMatrix> qf = quotient_field(g, vn_pair(), z0);
  const std::vector<HermitianMatrix> df = dual_field(g, vn_pair(), z0);
  for (int i = 0; i < 2; ++i) {
    const CMat expected =
        df[i].mat() - (df[i].trace() / 2.0) * CMat::Identity(2, 2);
    CHECK(fnorm(qf[i].mat() - expected) <= 1e-12);
    CHECK(std::abs(qf[i].trace()) <= 1e-12);
  }
}

TEST_CASE("quotient field rejects scores with nonzero trace") {
  const QuantumGame g = matching_pennies_game();
  const std::vector<ScoreMatrix> bad =
      scores({HermitianMatrix::identity(2), HermitianMatrix::zero(2)});
  CHECK_THROWS_AS(quotient_field(g, vn_pair(), bad), ValidationError);
}

TEST_CASE("state field at the uniform state is the centered gradient over d") {
  std::mt19937_64 rng(11);
  for (int d : {2, 3, 4}) {
    const HermitianMatrix v = random_hermitian(rng, d, 1.5);
    const HermitianMatrix out =
        qd_field(vonneumann_kernel(), DensityMatrix::uniform(d), v);
    const CMat expected =
        (v.mat() - (v.trace() / d) * CMat::Identity(d, d)) / static_cast<double>(d);
    CHECK(fnorm(out.mat() - expected) <= 1e-12);
  }
}

TEST_CASE("state field vanishes under constant payoff gradients") {
  std::mt19937_64 rng(13);
  const DensityMatrix x = random_density(rng, 3, 0.3);
  for (const RegularizerKernel& k :
       {euclidean_kernel(), vonneumann_kernel(), tsallis_kernel(0.5)}) {
    const HermitianMatrix ci = HermitianMatrix::hermitized(1.7 * CMat::Identity(3, 3));
    CHECK(fnorm(qd_field(k, x, ci).mat()) <= 1e-12);
  }
}

TEST_CASE("diagonal entropic state field is the classical replicator") {
  const std::vector<double> xs{0.5, 0.3, 0.2};
  const std::vector<double> vs{1.0, -0.4, 0.2};
  const DensityMatrix x = DensityMatrix::diagonal(xs);
  const HermitianMatrix v = HermitianMatrix::from(diag_mat(vs));
  const CMat expected = replicator_diag(xs, vs);
  CHECK(fnorm(qd_field(vonneumann_kernel(), x, v).mat() - expected) <= 1e-12);
  CHECK(fnorm(qrd_field(x, v).mat() - expected) <= 1e-12);
}

TEST_CASE("state field output is hermitian and traceless") {
  std::mt19937_64 rng(17);
  for (const RegularizerKernel& k :
       {euclidean_kernel(), vonneumann_kernel(), tsallis_kernel(0.5)})
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix x = random_density(rng, 4, 0.2);
      const HermitianMatrix v = random_hermitian(rng, 4, 1.0);
      const HermitianMatrix out = qd_field(k, x, v);
      CHECK(fnorm(out.mat() - out.mat().adjoint()) == 0.0);
      CHECK(std::abs(out.trace()) <= 1e-10);
    }
}

TEST_CASE("entropic kernel specializes the state field to the replicator form") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix x = random_density(rng, 4, 0.2);
    const HermitianMatrix v = random_hermitian(rng, 4, 1.0);
    CHECK(fnorm(qd_field(vonneumann_kernel(), x, v).mat() - qrd_field(x, v).mat()) <=
          1e-12);
  }
}

TEST_CASE("replicator field halves the gradient at the maximally mixed qubit") {
  CMat pauli_x(2, 2);
  pauli_x << 0, 1, 1, 0;
  const HermitianMatrix v = HermitianMatrix::from(pauli_x);
  const HermitianMatrix out = qrd_field(DensityMatrix::uniform(2), v);
  CHECK(fnorm(out.mat() - 0.5 * pauli_x) <= 1e-12);
}

TEST_CASE("replicator field reweights diagonal advantage") {
  const HermitianMatrix out =
      qrd_field(DensityMatrix::diagonal({0.75, 0.25}), HermitianMatrix::from(diag_mat({1, 0})));
  // x (v - mean): mean = 3/4, entries 3/4*(1 - 3/4) and 1/4*(0 - 3/4).
  CHECK(fnorm(out.mat() - diag_mat({3.0 / 16.0, -3.0 / 16.0})) <= 1e-14);
}

TEST_CASE("replicator field agrees with the integral representation") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 4);
    const DensityMatrix x = random_density(rng, d, 0.2);
    const HermitianMatrix v = random_hermitian(rng, d, 1.0);
    CHECK(fnorm(qrd_field(x, v).mat() - qrd_integral_oracle(x, v).mat()) <= 1e-8);
  }
}

TEST_CASE("state field survives eigenvalue collisions via the continuity rule") {
  // Exactly degenerate spectrum; the off-diagonal gap ratio must not blow up.
  CMat u(3, 3);
  const double s = 1.0 / std::sqrt(2.0);
  u << s, s, 0, -s, s, 0, 0, 0, 1;
  const CMat xm = u * diag_mat({0.4, 0.4, 0.2}) * u.adjoint();
  const DensityMatrix x = DensityMatrix::from(HermitianMatrix::hermitized(xm));
  std::mt19937_64 rng(29);
  const HermitianMatrix v = random_hermitian(rng, 3, 1.0);
  const HermitianMatrix out = qrd_field(x, v);
  CHECK(out.mat().allFinite());
  CHECK(fnorm(out.mat() - qrd_integral_oracle(x, v).mat()) <= 1e-8);
}

TEST_CASE("all-pass game integrates to a linear score drift with frozen states") {
  const QuantumGame g = constant_game(0.8);
  SimulationConfig cfg = base_config(3.0);
  std::mt19937_64 rng(31);
  cfg.initial_scores = {random_hermitian(rng, 2, 1.0), random_hermitian(rng, 2, 1.0)};
  const Trajectory traj = integrate(g, cfg);

  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(3.0).epsilon(1e-12));
  for (size_t t = 1; t < traj.times.size(); ++t) CHECK(traj.times[t] > traj.times[t - 1]);

  for (size_t t = 0; t < traj.times.size(); ++t)
    for (int i = 0; i < 2; ++i) {
      const CMat expected =
          cfg.initial_scores[i].mat() + traj.times[t] * 0.8 * CMat::Identity(2, 2);
      CHECK(fnorm(traj.dual_scores[t][i].mat.mat() - expected) <= 1e-9);
      CHECK(fnorm(traj.states[t][i].mat() - traj.states[0][i].mat()) <= 1e-12);
    }
}

TEST_CASE("adaptive and fixed-step integrations land on the same trajectory") {
  const QuantumGame g = matching_pennies_game();
  SimulationConfig cfg = base_config(5.0);
  std::mt19937_64 rng(37);
  cfg.initial_scores = {random_traceless(rng, 2, 0.6), random_traceless(rng, 2, 0.6)};

  SimulationConfig fixed = cfg;
  fixed.integrator.kind = IntegratorSpec::Kind::rk4_fixed;
  fixed.integrator.step = 1e-3;

  const Trajectory a = integrate(g, cfg);
  const Trajectory b = integrate(g, fixed);
  REQUIRE(a.times.size() == b.times.size());
  CHECK(profile_distance(a.states.back(), b.states.back()) <= 1e-6);
}

TEST_CASE("quotient integration reproduces the dual flow modulo trace") {
  const QuantumGame g = dominance_game();
  SimulationConfig dual_cfg = base_config(5.0);
  std::mt19937_64 rng(41);
  dual_cfg.initial_scores = {random_hermitian(rng, 2, 0.8), random_hermitian(rng, 2, 0.8)};

  SimulationConfig quot_cfg = dual_cfg;
  quot_cfg.space = FlowSpace::quotient;
  quot_cfg.initial_scores.clear();
  for (const HermitianMatrix& y : dual_cfg.initial_scores)
    quot_cfg.initial_scores.push_back(HermitianMatrix::hermitized(
        y.mat() - (y.trace() / 2.0) * CMat::Identity(2, 2)));

  const Trajectory dual_traj = integrate(g, dual_cfg);
  const Trajectory quot_traj = integrate(g, quot_cfg);
  REQUIRE(dual_traj.times.size() == quot_traj.times.size());
  for (size_t t = 0; t < dual_traj.times.size(); t += 10)
    CHECK(profile_distance(dual_traj.states[t], quot_traj.states[t]) <= 1e-8);
  for (const auto& row : quot_traj.dual_scores)
    for (const ScoreMatrix& z : row) CHECK(std::abs(z.mat.trace()) <= 1e-9);
}

TEST_CASE("primal integration tracks the dual flow through the mirror map") {
  const QuantumGame g = dominance_game();
  SimulationConfig primal_cfg = base_config(5.0);
  primal_cfg.space = FlowSpace::primal;
  primal_cfg.initial_states = {DensityMatrix::diagonal({0.2, 0.8}),
                               DensityMatrix::diagonal({0.8, 0.2})};

  SimulationConfig dual_cfg = base_config(5.0);
  dual_cfg.initial_states = primal_cfg.initial_states;

  const Trajectory primal_traj = integrate(g, primal_cfg);
  const Trajectory dual_traj = integrate(g, dual_cfg);
  REQUIRE(primal_traj.times.size() == dual_traj.times.size());
  CHECK(profile_distance(primal_traj.states.back(), dual_traj.states.back()) <= 1e-5);
  CHECK(primal_traj.dual_scores.empty());
}

TEST_CASE("steep primal flows keep their eigenvalues strictly positive") {
  std::mt19937_64 rng(43);
  const QuantumGame g = random_lifted_game(rng, {2, 2}, false);
  SimulationConfig cfg = base_config(10.0);
  cfg.space = FlowSpace::primal;
  cfg.initial_states = {DensityMatrix::diagonal({0.9, 0.1}),
                        DensityMatrix::diagonal({0.4, 0.6})};
  const Trajectory traj = integrate(g, cfg);
  for (const auto& row : traj.states)
    for (const DensityMatrix& x : row) {
      const EigenDecomposition ed = hermitian_eig(x.hermitian());
      CHECK(ed.eigenvalues.minCoeff() > 0.0);
    }
}

TEST_CASE("cycling flows come back near their starting profile") {
  const QuantumGame g = matching_pennies_game();
  SimulationConfig cfg = base_config(50.0);
  std::mt19937_64 rng(47);
  cfg.initial_scores = {random_traceless(rng, 2, 0.6), random_traceless(rng, 2, 0.6)};
  const Trajectory traj = integrate(g, cfg);
  double closest = 1e100;
  for (size_t t = 0; t < traj.times.size(); ++t) {
    if (traj.times[t] <= 1.0) continue;
    closest = std::min(closest, profile_distance(traj.states[t], traj.states[0]));
  }
  CHECK(closest < 0.05);
}

TEST_CASE("invalid run configurations are rejected before integration") {
  const QuantumGame g = matching_pennies_game();

  SimulationConfig cfg = base_config(-1.0);
  cfg.initial_scores = {HermitianMatrix::zero(2), HermitianMatrix::zero(2)};
  CHECK_THROWS_AS(integrate(g, cfg), ValidationError);

  cfg = base_config(1.0);
  cfg.kernels = {vonneumann_kernel()};
  cfg.initial_scores = {HermitianMatrix::zero(2), HermitianMatrix::zero(2)};
  CHECK_THROWS_AS(integrate(g, cfg), ValidationError);

  cfg = base_config(1.0);
  cfg.initial_scores = {HermitianMatrix::zero(2), HermitianMatrix::zero(2)};
  cfg.initial_states = {DensityMatrix::uniform(2), DensityMatrix::uniform(2)};
  CHECK_THROWS_AS(integrate(g, cfg), ValidationError);

  cfg = base_config(1.0);
  CHECK_THROWS_AS(integrate(g, cfg), ValidationError);  // no initial condition

  cfg = base_config(1.0);
  cfg.space = FlowSpace::primal;
  cfg.kernels = {euclidean_kernel(), euclidean_kernel()};
  cfg.initial_states = {DensityMatrix::uniform(2), DensityMatrix::uniform(2)};
  CHECK_THROWS_AS(integrate(g, cfg), ValidationError);  // non-steep primal flow

  cfg = base_config(1.0);
  cfg.initial_scores = {HermitianMatrix::zero(3), HermitianMatrix::zero(2)};
  CHECK_THROWS_AS(integrate(g, cfg), ValidationError);  // dim mismatch
}
