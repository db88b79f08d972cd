#include "qflow/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

namespace qflow {

namespace {

// Trapezoid weights on the (possibly uneven) record grid.
std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  const size_t n = t.size();
  std::vector<double> w(n, 0.0);
  for (size_t j = 0; j + 1 < n; ++j) {
    const double half = 0.5 * (t[j + 1] - t[j]);
    w[j] += half;
    w[j + 1] += half;
  }
  return w;
}

int thread_budget() {
  if (const char* env = std::getenv("QFLOW_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

}  // namespace

double regret_bound(const RegularizerKernel& k, int d) {
  if (d < 1) throw DimensionError("regret_bound: dimension must be positive");
  return std::abs(d * k.theta(1.0 / d) - k.theta(1.0));
}

RegretReport regret(const Trajectory& traj, const std::vector<RegularizerKernel>& kernels) {
  if (traj.times.size() < 2)
    throw MissingDataError("regret: trajectory has fewer than two records");
  const int n = static_cast<int>(traj.states.front().size());
  if (static_cast<int>(kernels.size()) != n)
    throw DimensionError("regret: need one kernel per player");

  const std::vector<double> w = trapezoid_weights(traj.times);
  RegretReport rep;
  rep.horizon = traj.times.back() - traj.times.front();
  for (int i = 0; i < n; ++i) {
    const int d = traj.states.front()[i].dim();
    CMat acc = CMat::Zero(d, d);
    double earned = 0.0;
    for (size_t j = 0; j < traj.times.size(); ++j) {
      const CMat& v = traj.gradients[j][i].mat();
      acc += w[j] * v;
      earned += w[j] * (traj.states[j][i].mat() * v).trace().real();
    }
    const EigenDecomposition ed = hermitian_eig(HermitianMatrix::hermitized(acc));
    PlayerRegret pr{
        ed.eigenvalues[0] - earned,
        regret_bound(kernels[i], d),
        DensityMatrix::trusted(HermitianMatrix::hermitized(
            ed.eigenvectors.col(0) * ed.eigenvectors.col(0).adjoint()))};
    rep.players.push_back(std::move(pr));
  }
  return rep;
}

ConservationReport fenchel_series(const Trajectory& traj,
                                  const std::vector<RegularizerKernel>& kernels,
                                  const StateProfile& reference) {
  if (traj.dual_scores.empty())
    throw MissingDataError("fenchel_series: trajectory carries no dual scores "
                           "(primal-space run)");
  const int n = static_cast<int>(reference.states.size());
  if (static_cast<int>(kernels.size()) != n)
    throw DimensionError("fenchel_series: need one kernel per player");

  ConservationReport rep;
  rep.times = traj.times;
  for (size_t j = 0; j < traj.times.size(); ++j) {
    double f = 0.0;
    for (int i = 0; i < n; ++i)
      f += fenchel_coupling(kernels[i], reference.states[i], traj.dual_scores[j][i]);
    rep.values.push_back(f);
  }
  for (double f : rep.values)
    rep.max_drift = std::max(rep.max_drift, std::abs(f - rep.values.front()));
  return rep;
}

RecurrenceReport recurrence_stats(const Trajectory& traj, double r_out) {
  if (traj.times.size() < 2)
    throw MissingDataError("recurrence_stats: trajectory has fewer than two records");
  const int n = static_cast<int>(traj.states.front().size());

  auto dist_to_start = [&](size_t j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = fnorm(traj.states[j][i].mat() - traj.states[0][i].mat());
      acc += d * d;
    }
    return std::sqrt(acc);
  };

  RecurrenceReport rep;
  rep.r_out = r_out;
  size_t dep = traj.times.size();
  for (size_t j = 1; j < traj.times.size(); ++j)
    if (dist_to_start(j) > r_out) {
      dep = j;
      rep.departed = true;
      rep.departure_time = traj.times[j];
      break;
    }
  double best = std::numeric_limits<double>::infinity();
  // After departure if it happened, otherwise over the whole tail.
  for (size_t j = (rep.departed ? dep + 1 : 1); j < traj.times.size(); ++j)
    best = std::min(best, dist_to_start(j));
  rep.return_distance = std::isfinite(best) ? best : 0.0;
  return rep;
}

VsProbeReport vs_probe(const QuantumGame& g, const StateProfile& center, double radius,
                       int samples, std::uint64_t seed) {
  if (!(radius > 0.0)) throw ValidationError("vs_probe: radius must be positive");
  if (samples < 1) throw ValidationError("vs_probe: need at least one sample");
  const int n = g.num_players();
  if (static_cast<int>(center.states.size()) != n)
    throw DimensionError("vs_probe: center has wrong player count");

  const RegularizerKernel eucl = euclidean_kernel();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = radius / 2.0;

  // Pre-draw accepted profiles sequentially so the thread split cannot
  // change the sample set.
  std::vector<StateProfile> accepted;
  long long attempts = 0;
  const long long cap = 1000LL * samples;
  while (static_cast<int>(accepted.size()) < samples && attempts++ < cap) {
    StateProfile x;
    double dist = 0.0;
    for (int i = 0; i < n; ++i) {
      const int d = g.player_dims()[i];
      CMat pert(d, d);
      for (int a = 0; a < d; ++a) {
        pert(a, a) = gauss(rng);
        for (int b = a + 1; b < d; ++b) {
          const Cx e(gauss(rng) / std::sqrt(2.0), gauss(rng) / std::sqrt(2.0));
          pert(a, b) = e;
          pert(b, a) = std::conj(e);
        }
      }
      const HermitianMatrix score =
          HermitianMatrix::hermitized(center.states[i].mat() + scale * pert);
      x.states.push_back(mirror(eucl, score));
      const double di = fnorm(x.states[i].mat() - center.states[i].mat());
      dist += di * di;
    }
    dist = std::sqrt(dist);
    if (dist > radius || dist < 1e-12) continue;
    accepted.push_back(std::move(x));
  }
  if (static_cast<int>(accepted.size()) < samples)
    throw ConvergenceError("vs_probe: rejection sampling starved; radius too small");

  auto margin_of = [&](const StateProfile& x) {
    const std::vector<HermitianMatrix> v = gradient_fields(g, x);
    double m = 0.0;
    for (int i = 0; i < n; ++i)
      m += (v[i].mat() * (x.states[i].mat() - center.states[i].mat())).trace().real();
    return m;
  };

  const int threads = std::min(thread_budget(), samples);
  std::vector<double> partial(threads, -std::numeric_limits<double>::infinity());
  {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int s = t; s < samples; s += threads)
          partial[t] = std::max(partial[t], margin_of(accepted[s]));
      });
    for (std::thread& th : pool) th.join();
  }

  VsProbeReport rep;
  rep.margin = *std::max_element(partial.begin(), partial.end());
  rep.radius = radius;
  rep.samples = samples;
  rep.seed = seed;
  return rep;
}

double purity(const DensityMatrix& x) {
  return (x.mat() * x.mat()).trace().real();
}

std::array<double, 3> bloch_coords(const DensityMatrix& x) {
  if (x.dim() != 2)
    throw DimensionError("bloch_coords: defined for qubits only, dim is " +
                         std::to_string(x.dim()));
  const CMat& m = x.mat();
  return {2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(), m(0, 0).real() - m(1, 1).real()};
}

double stationarity_residual(const QuantumGame& g,
                             const std::vector<RegularizerKernel>& kernels,
                             const StateProfile& rho) {
  const std::vector<HermitianMatrix> v = gradient_fields(g, rho);
  double acc = 0.0;
  for (int i = 0; i < g.num_players(); ++i) {
    const double r = fnorm(qd_field(kernels[i], rho.states[i], v[i]).mat());
    acc += r * r;
  }
  return std::sqrt(acc);
}

}  // namespace qflow
