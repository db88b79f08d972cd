#include "qflow/dynamics.hpp"

#include <cmath>

namespace qflow {

namespace {

constexpr double kDegenerateGap = 1e-9;  // eigenvalue gap below which the
                                         // difference quotient is continued
constexpr double kTracelessTol = 1e-10;  // quotient_field input check

/* Difference quotient (x_l - x_k)/(theta'(x_l) - theta'(x_k)), continued as
 * 1/theta''(midpoint) when the gap closes (second-order accurate, and exact
 * in the limit). */
double dual_gap_ratio(const RegularizerKernel& k, double xk, double xl) {
  if (std::abs(xl - xk) <= kDegenerateGap * std::max({xk, xl, 1.0}))
    return 1.0 / k.ddtheta(0.5 * (xk + xl));
  return (xl - xk) / (k.dtheta(xl) - k.dtheta(xk));
}

// von Neumann case via log1p: (x_l - x_k)/log(x_l/x_k), stable at all gaps.
double log_gap_ratio(double xk, double xl) {
  const double diff = xl - xk;
  if (std::abs(diff) <= kDegenerateGap * std::max({xk, xl, 1.0}))
    return 0.5 * (xk + xl);
  return diff / std::log1p(diff / xk);
}

CMat qd_field_mat(const RegularizerKernel& k, const CMat& x, const CMat& v) {
  const EigenDecomposition ed = hermitian_eig(x);
  const int d = static_cast<int>(x.rows());
  RVec xs = ed.eigenvalues.cwiseMax(kEigFloor);
  const CMat vh = ed.eigenvectors.adjoint() * v * ed.eigenvectors;

  RVec dpp(d);
  for (int i = 0; i < d; ++i) dpp[i] = k.ddtheta(xs[i]);
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < d; ++i) {
    s1 += vh(i, i).real() / dpp[i];
    s2 += 1.0 / dpp[i];
  }

  CMat m(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = vh(i, i).real() / dpp[i] - s1 / (dpp[i] * s2);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Cx e = dual_gap_ratio(k, xs[i], xs[j]) * vh(i, j);
      m(i, j) = e;
      m(j, i) = std::conj(e);
    }
  return ed.eigenvectors * m * ed.eigenvectors.adjoint();
}

CMat qrd_field_mat(const CMat& x, const CMat& v) {
  const EigenDecomposition ed = hermitian_eig(x);
  const int d = static_cast<int>(x.rows());
  RVec xs = ed.eigenvalues.cwiseMax(kEigFloor);
  const CMat vh = ed.eigenvectors.adjoint() * v * ed.eigenvectors;

  double mean = 0.0;
  for (int i = 0; i < d; ++i) mean += xs[i] * vh(i, i).real();

  CMat m(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = xs[i] * (vh(i, i).real() - mean);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Cx e = log_gap_ratio(xs[i], xs[j]) * vh(i, j);
      m(i, j) = e;
      m(j, i) = std::conj(e);
    }
  return ed.eigenvectors * m * ed.eigenvectors.adjoint();
}

/* Flattens a profile of Hermitian d x d matrices into d^2 reals each
 * (diagonal, then upper-triangle re/im), so every integrator stage stays
 * exactly Hermitian. */
struct Packer {
  std::vector<int> dims;
  std::vector<int> offs;
  int total = 0;

  explicit Packer(std::vector<int> d) : dims(std::move(d)) {
    for (int dd : dims) {
      offs.push_back(total);
      total += dd * dd;
    }
  }

  RVec pack(const std::vector<CMat>& mats) const {
    RVec v(total);
    for (size_t p = 0; p < dims.size(); ++p) {
      const int d = dims[p];
      int at = offs[p];
      for (int i = 0; i < d; ++i) v[at++] = mats[p](i, i).real();
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          v[at++] = mats[p](i, j).real();
          v[at++] = mats[p](i, j).imag();
        }
    }
    return v;
  }

  std::vector<CMat> unpack(const RVec& v) const {
    std::vector<CMat> mats;
    for (size_t p = 0; p < dims.size(); ++p) {
      const int d = dims[p];
      CMat m(d, d);
      int at = offs[p];
      for (int i = 0; i < d; ++i) m(i, i) = v[at++];
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          const double re = v[at++], im = v[at++];
          m(i, j) = Cx(re, im);
          m(j, i) = Cx(re, -im);
        }
      mats.push_back(std::move(m));
    }
    return mats;
  }
};

using Field = std::function<RVec(const RVec&)>;

void rk4_span(const Field& f, RVec& y, double t0, double t1, double step) {
  const double span = t1 - t0;
  const int n = std::max(1, static_cast<int>(std::ceil(span / step - 1e-12)));
  const double h = span / n;
  for (int s = 0; s < n; ++s) {
    const RVec k1 = f(y);
    const RVec k2 = f(y + 0.5 * h * k1);
    const RVec k3 = f(y + 0.5 * h * k2);
    const RVec k4 = f(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

/* Dormand-Prince 4(5) over [t0, t1] with free step selection; record times
 * inside a step are filled from the standard 4th-order continuous extension,
 * so output density never throttles the step size. */
void dopri_drive(const Field& f, RVec& y, double t0, double t1, double rtol, double atol,
                 const std::vector<double>& grid, size_t next,
                 const std::function<void(const RVec&, double)>& record) {
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
  // Continuous-extension weights (Shampine's interpolant for this pair).
  static const double d1 = -12715105075.0 / 11282082432.0,
                      d3 = 87487479700.0 / 32700410799.0,
                      d4 = -10690763975.0 / 1880347072.0,
                      d5 = 701980252875.0 / 199316789632.0,
                      d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  double t = t0;
  double h = std::min(1e-2, t1 - t0);
  RVec k1 = f(y);  // first-same-as-last: k7 of an accepted step seeds the next k1
  while (t < t1 - 1e-14 * std::max(1.0, std::abs(t1))) {
    h = std::min(h, t1 - t);
    if (h < 1e-12 * std::max(1.0, std::abs(t)))
      throw IntegrationError("dopri45: step size underflow at t = " + std::to_string(t) +
                             "; dynamics too stiff (state near the simplex boundary)");
    const RVec k2 = f(y + h * (a21 * k1));
    const RVec k3 = f(y + h * (a31 * k1 + a32 * k2));
    const RVec k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const RVec k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const RVec k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const RVec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const RVec k7 = f(y5);
    const RVec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    const double enorm = std::sqrt(acc / static_cast<double>(y.size()));

    if (enorm <= 1.0) {
      if (next < grid.size() && grid[next] <= t + h + 1e-12 * std::max(1.0, t + h)) {
        const RVec ydiff = y5 - y;
        const RVec bspl = h * k1 - ydiff;
        const RVec rc4 = ydiff - h * k7 - bspl;
        const RVec rc5 =
            h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next < grid.size() &&
               grid[next] <= t + h + 1e-12 * std::max(1.0, t + h)) {
          const double th = std::clamp((grid[next] - t) / h, 0.0, 1.0);
          const double th1 = 1.0 - th;
          record(y + th * (ydiff + th1 * (bspl + th * (rc4 + th1 * rc5))), grid[next]);
          ++next;
        }
      }
      t += h;
      y = y5;
      k1 = k7;
      const double grow = enorm < 1e-10 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      h *= std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 0.95);
    }
  }
  for (; next < grid.size(); ++next) record(y, grid[next]);
}

std::vector<double> record_grid(double horizon, double stride) {
  std::vector<double> ts;
  for (long long j = 0;; ++j) {
    const double t = static_cast<double>(j) * stride;
    if (t >= horizon - 1e-9 * std::max(stride, 1.0)) break;
    ts.push_back(t);
  }
  ts.push_back(horizon);
  return ts;
}

void check_config(const QuantumGame& g, const SimulationConfig& cfg) {
  const int n = g.num_players();
  if (static_cast<int>(cfg.kernels.size()) != n)
    throw ValidationError("config.kernels: need one kernel per player");
  if (!(cfg.horizon > 0.0)) throw ValidationError("config.horizon: must be positive");
  if (!(cfg.record_stride > 0.0))
    throw ValidationError("config.record_stride: must be positive");
  if (cfg.integrator.kind == IntegratorSpec::Kind::rk4_fixed) {
    if (!(cfg.integrator.step > 0.0))
      throw ValidationError("config.integrator.step: must be positive");
  } else {
    if (!(cfg.integrator.rtol > 0.0) || !(cfg.integrator.atol > 0.0))
      throw ValidationError("config.integrator: rtol and atol must be positive");
  }
  const bool have_scores = !cfg.initial_scores.empty();
  const bool have_states = !cfg.initial_states.empty();
  if (have_scores == have_states)
    throw ValidationError("config.initial: exactly one of scores/states must be given");
  if (have_scores && static_cast<int>(cfg.initial_scores.size()) != n)
    throw ValidationError("config.initial: need one score matrix per player");
  if (have_states && static_cast<int>(cfg.initial_states.size()) != n)
    throw ValidationError("config.initial: need one state per player");
  for (int i = 0; i < n; ++i) {
    const int d = have_scores ? cfg.initial_scores[i].dim() : cfg.initial_states[i].dim();
    if (d != g.player_dims()[i])
      throw ValidationError("config.initial: dim mismatch for player " + std::to_string(i));
  }
  if (cfg.space == FlowSpace::primal)
    for (const RegularizerKernel& k : cfg.kernels)
      if (!k.steep)
        throw ValidationError("config.space: primal integration requires steep kernels "
                              "(kernel '" + k.name + "' is not)");
}

}  // namespace

std::vector<HermitianMatrix> dual_field(const QuantumGame& g,
                                        const std::vector<RegularizerKernel>& kernels,
                                        const std::vector<ScoreMatrix>& y) {
  if (kernels.size() != y.size() || static_cast<int>(y.size()) != g.num_players())
    throw DimensionError("dual_field: player count mismatch");
  std::vector<CMat> states;
  for (size_t i = 0; i < y.size(); ++i) states.push_back(mirror(kernels[i], y[i]).mat());
  std::vector<HermitianMatrix> v = gradient_fields_raw(g, states);
  return v;
}

std::vector<HermitianMatrix> quotient_field(const QuantumGame& g,
                                            const std::vector<RegularizerKernel>& kernels,
                                            const std::vector<ScoreMatrix>& z) {
  for (const ScoreMatrix& zi : z)
    if (std::abs(zi.mat.trace()) > kTracelessTol)
      throw ValidationError("quotient_field: input score has trace " +
                            std::to_string(zi.mat.trace()));
  std::vector<HermitianMatrix> v = dual_field(g, kernels, z);
  for (HermitianMatrix& vi : v) {
    const int d = vi.dim();
    CMat m = vi.mat() - (vi.trace() / d) * CMat::Identity(d, d);
    vi = HermitianMatrix::hermitized(m);
  }
  return v;
}

HermitianMatrix qd_field(const RegularizerKernel& k, const DensityMatrix& x,
                         const HermitianMatrix& v) {
  if (x.dim() != v.dim()) throw DimensionError("qd_field: dimension mismatch");
  return HermitianMatrix::hermitized(qd_field_mat(k, x.mat(), v.mat()));
}

HermitianMatrix qrd_field(const DensityMatrix& x, const HermitianMatrix& v) {
  if (x.dim() != v.dim()) throw DimensionError("qrd_field: dimension mismatch");
  return HermitianMatrix::hermitized(qrd_field_mat(x.mat(), v.mat()));
}

Trajectory integrate(const QuantumGame& g, const SimulationConfig& cfg) {
  check_config(g, cfg);
  const int n = g.num_players();
  const Packer pk(g.player_dims());

  // Seed the working vector in the requested space.
  std::vector<CMat> init;
  if (cfg.space == FlowSpace::primal) {
    std::vector<DensityMatrix> x0;
    if (!cfg.initial_states.empty()) {
      x0 = cfg.initial_states;
    } else {
      for (int i = 0; i < n; ++i)
        x0.push_back(mirror(cfg.kernels[i], cfg.initial_scores[i]));
    }
    for (const DensityMatrix& x : x0) {
      const EigenDecomposition ed = hermitian_eig(x.hermitian());
      if (ed.eigenvalues.minCoeff() < 1e-12)
        throw ValidationError("config.initial: primal integration needs full-rank "
                              "states (min eigenvalue " +
                              std::to_string(ed.eigenvalues.minCoeff()) + ")");
      init.push_back(x.mat());
    }
  } else {
    for (int i = 0; i < n; ++i) {
      CMat y0;
      if (!cfg.initial_scores.empty()) {
        y0 = cfg.initial_scores[i].mat();
      } else {
        // Y_0 = theta'(X_0), eigenvalues floored so steep kernels stay finite.
        const RegularizerKernel& k = cfg.kernels[i];
        y0 = func_calculus(cfg.initial_states[i].hermitian(),
                           [&k](double t) { return k.dtheta(std::max(t, kEigFloor)); })
                 .mat();
      }
      if (cfg.space == FlowSpace::quotient) {
        const int d = static_cast<int>(y0.rows());
        y0 -= (y0.trace() / static_cast<double>(d)) * CMat::Identity(d, d);
      }
      init.push_back(std::move(y0));
    }
  }
  RVec y = pk.pack(init);

  Field f = [&](const RVec& v) -> RVec {
    std::vector<CMat> mats = pk.unpack(v);
    if (cfg.space == FlowSpace::primal) {
      std::vector<CMat> grads;
      for (const CMat& m : mats) grads.push_back(m);
      std::vector<HermitianMatrix> vf = gradient_fields_raw(g, grads);
      std::vector<CMat> deriv;
      for (int i = 0; i < n; ++i)
        deriv.push_back(qd_field_mat(cfg.kernels[i], mats[i], vf[i].mat()));
      return pk.pack(deriv);
    }
    std::vector<CMat> states;
    for (int i = 0; i < n; ++i)
      states.push_back(mirror(cfg.kernels[i], HermitianMatrix::hermitized(mats[i])).mat());
    std::vector<HermitianMatrix> vf = gradient_fields_raw(g, states);
    std::vector<CMat> deriv;
    for (int i = 0; i < n; ++i) {
      CMat dm = vf[i].mat();
      if (cfg.space == FlowSpace::quotient) {
        const int d = static_cast<int>(dm.rows());
        dm -= (dm.trace() / static_cast<double>(d)) * CMat::Identity(d, d);
      }
      deriv.push_back(std::move(dm));
    }
    return pk.pack(deriv);
  };

  Trajectory traj;
  traj.space = cfg.space;
  const std::vector<double> grid = record_grid(cfg.horizon, cfg.record_stride);

  auto record = [&](const RVec& v, double t) {
    std::vector<CMat> mats = pk.unpack(v);
    std::vector<ScoreMatrix> scores;
    std::vector<DensityMatrix> states;
    for (int i = 0; i < n; ++i) {
      if (cfg.space == FlowSpace::primal) {
        CMat m = mats[i] / mats[i].trace().real();  // absorb integrator trace drift
        try {
          states.push_back(DensityMatrix::from(HermitianMatrix::hermitized(m)));
        } catch (const ValidationError& e) {
          throw IntegrationError("primal state left the density set at t = " +
                                 std::to_string(t) + ": " + e.what());
        }
      } else {
        HermitianMatrix yi = HermitianMatrix::hermitized(mats[i]);
        scores.push_back(ScoreMatrix{yi, cfg.space == FlowSpace::quotient});
        states.push_back(mirror(cfg.kernels[i], yi));
      }
    }
    std::vector<CMat> smats;
    for (const DensityMatrix& s : states) smats.push_back(s.mat());
    traj.times.push_back(t);
    traj.gradients.push_back(gradient_fields_raw(g, smats));
    traj.states.push_back(std::move(states));
    if (cfg.space != FlowSpace::primal) traj.dual_scores.push_back(std::move(scores));
  };

  record(y, grid.front());
  if (cfg.integrator.kind == IntegratorSpec::Kind::rk4_fixed) {
    for (size_t j = 0; j + 1 < grid.size(); ++j) {
      rk4_span(f, y, grid[j], grid[j + 1], cfg.integrator.step);
      record(y, grid[j + 1]);
    }
  } else {
    dopri_drive(f, y, grid.front(), grid.back(), cfg.integrator.rtol, cfg.integrator.atol,
                grid, 1, record);
  }
  return traj;
}

}  // namespace qflow
