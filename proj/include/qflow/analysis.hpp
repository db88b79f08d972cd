#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "qflow/dynamics.hpp"

namespace qflow {

/* Per-player regret over a recorded run.  A_i = integral of V_i dt
 * (trapezoid on the record grid); the best fixed state is the projector
 * onto A_i's top eigenvector; realized regret is lambda_max(A_i) minus the
 * accumulated payoff integral of tr(X_i V_i) dt. */
struct PlayerRegret {
  double realized = 0.0;
  double bound = 0.0;  // |d theta(1/d) - theta(1)|
  DensityMatrix best_fixed;
};

struct RegretReport {
  double horizon = 0.0;
  std::vector<PlayerRegret> players;
};

// Worst-case regret constant of a kernel on dimension d.
double regret_bound(const RegularizerKernel& k, int d);

RegretReport regret(const Trajectory& traj, const std::vector<RegularizerKernel>& kernels);

/* Fenchel coupling series F(P, Y(t)) = sum_i F_i(P_i, Y_i(t)) against a
 * reference profile; constant along zero-sum flows through a full-rank
 * equilibrium, strictly decreasing toward a variationally stable state. */
struct ConservationReport {
  std::vector<double> times;
  std::vector<double> values;
  double max_drift = 0.0;  // max |F(t) - F(0)|
};

ConservationReport fenchel_series(const Trajectory& traj,
                                  const std::vector<RegularizerKernel>& kernels,
                                  const StateProfile& reference);

/* Departure/return statistics of the recorded state path, in the profile
 * Frobenius metric sqrt(sum_i ||X_i(t) - X_i(0)||_F^2). */
struct RecurrenceReport {
  double r_out = 0.0;
  bool departed = false;
  std::optional<double> departure_time;  // first record beyond r_out
  double return_distance = 0.0;          // min distance after departure
};

RecurrenceReport recurrence_stats(const Trajectory& traj, double r_out);

/* Empirical variational-stability probe: samples random profiles within
 * `radius` of the center (Gaussian Hermitian scores pushed through the
 * Euclidean mirror map, rejection beyond the radius) and reports the worst
 * (largest) value of sum_i tr[V_i(X)(X_i - P*_i)].  Negative margin means
 * every sampled deviation points back toward the center. */
struct VsProbeReport {
  double margin = 0.0;
  double radius = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

VsProbeReport vs_probe(const QuantumGame& g, const StateProfile& center, double radius,
                       int samples, std::uint64_t seed);

// tr(X^2); 1 exactly on pure states, 1/d on the uniform state.
double purity(const DensityMatrix& x);

// d=2 only: (x, y, z) = (2 Re X01, -2 Im X01, X00 - X11).
std::array<double, 3> bloch_coords(const DensityMatrix& x);

// Profile-level norm of the induced state field; ~0 at stationary profiles.
double stationarity_residual(const QuantumGame& g,
                             const std::vector<RegularizerKernel>& kernels,
                             const StateProfile& rho);

}  // namespace qflow
