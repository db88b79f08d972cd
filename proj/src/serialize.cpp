#include "qflow/serialize.hpp"

#include <cstdio>
#include <ostream>

namespace qflow {

namespace {

const njson& need(const njson& j, const char* key, const std::string& path) {
  if (!j.is_object())
    throw ValidationError(path + ": expected an object");
  if (!j.contains(key))
    throw ValidationError(path + "." + key + ": missing");
  return j.at(key);
}

double need_number(const njson& j, const char* key, const std::string& path) {
  const njson& v = need(j, key, path);
  if (!v.is_number())
    throw ValidationError(path + "." + key + ": expected a number");
  return v.get<double>();
}

std::string need_string(const njson& j, const char* key, const std::string& path) {
  const njson& v = need(j, key, path);
  if (!v.is_string())
    throw ValidationError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

const njson& need_array(const njson& j, const char* key, const std::string& path) {
  const njson& v = need(j, key, path);
  if (!v.is_array())
    throw ValidationError(path + "." + key + ": expected an array");
  return v;
}

Cx cx_from_json(const njson& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError(path + ": complex entries are [re, im] pairs");
  return Cx(j[0].get<double>(), j[1].get<double>());
}

// Row-major nested [re,im] table -> shape + flat values, for classical_tables.
void flatten_table(const njson& j, int depth, std::vector<int>& shape,
                   std::vector<double>& out, const std::string& path) {
  if (j.is_number()) {
    if (depth != static_cast<int>(shape.size()))
      throw ValidationError(path + ": nesting depth is uneven");
    out.push_back(j.get<double>());
    return;
  }
  if (!j.is_array() || j.empty())
    throw ValidationError(path + ": expected a nonempty nested numeric array");
  if (depth == static_cast<int>(shape.size()))
    shape.push_back(static_cast<int>(j.size()));
  else if (static_cast<int>(j.size()) != shape[depth])
    throw ValidationError(path + ": ragged table");
  for (size_t i = 0; i < j.size(); ++i)
    flatten_table(j[i], depth + 1, shape, out, path + "[" + std::to_string(i) + "]");
}

void fmt17(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

std::vector<std::vector<HermitianMatrix>> herm_series_from_json(
    const njson& j, const std::string& path) {
  std::vector<std::vector<HermitianMatrix>> out;
  for (size_t t = 0; t < j.size(); ++t) {
    std::vector<HermitianMatrix> row;
    for (size_t i = 0; i < j[t].size(); ++i)
      row.push_back(HermitianMatrix::from(cmat_from_json(
          j[t][i], path + "[" + std::to_string(t) + "][" + std::to_string(i) + "]")));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

njson cmat_to_json(const CMat& m) {
  njson rows = njson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    njson row = njson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(njson::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat cmat_from_json(const njson& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw ValidationError(path + ": expected a nonempty array of rows");
  const int rows = static_cast<int>(j.size());
  if (!j[0].is_array() || j[0].empty())
    throw ValidationError(path + "[0]: expected a nonempty row");
  const int cols = static_cast<int>(j[0].size());
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw ValidationError(path + "[" + std::to_string(r) + "]: ragged matrix");
    for (int c = 0; c < cols; ++c)
      m(r, c) = cx_from_json(j[r][c], path + "[" + std::to_string(r) + "][" +
                                          std::to_string(c) + "]");
  }
  if (!m.allFinite()) throw ValidationError(path + ": non-finite entry");
  return m;
}

njson game_to_json(const QuantumGame& g) {
  njson j;
  j["player_dims"] = g.player_dims();
  j["zero_sum"] = g.zero_sum();
  njson outs = njson::array();
  for (const PovmOutcome& o : g.outcomes()) {
    njson jo;
    jo["operator"] = cmat_to_json(o.op.mat());
    jo["payoffs"] = o.payoffs;
    if (!o.label.empty()) jo["label"] = o.label;
    outs.push_back(std::move(jo));
  }
  j["outcomes"] = std::move(outs);
  return j;
}

QuantumGame game_from_json(const njson& j) {
  if (j.is_object() && j.contains("classical_tables")) {
    const njson& jt = j.at("classical_tables");
    if (!jt.is_array() || jt.empty())
      throw ValidationError("classical_tables: expected one table per player");
    std::vector<ClassicalTable> tables;
    for (size_t i = 0; i < jt.size(); ++i) {
      ClassicalTable t;
      flatten_table(jt[i], 0, t.shape, t.values,
                    "classical_tables[" + std::to_string(i) + "]");
      tables.push_back(std::move(t));
    }
    return QuantumGame::from_classical(tables);
  }

  const njson& jd = need_array(j, "player_dims", "game");
  std::vector<int> dims;
  for (size_t i = 0; i < jd.size(); ++i) {
    if (!jd[i].is_number_integer())
      throw ValidationError("game.player_dims[" + std::to_string(i) + "]: expected an integer");
    dims.push_back(jd[i].get<int>());
  }
  const njson& jo = need_array(j, "outcomes", "game");
  std::vector<PovmOutcome> outcomes;
  for (size_t w = 0; w < jo.size(); ++w) {
    const std::string path = "game.outcomes[" + std::to_string(w) + "]";
    PovmOutcome o{
        HermitianMatrix::from(cmat_from_json(need(jo[w], "operator", path), path + ".operator")),
        {},
        {}};
    const njson& jp = need_array(jo[w], "payoffs", path);
    for (size_t i = 0; i < jp.size(); ++i) {
      if (!jp[i].is_number())
        throw ValidationError(path + ".payoffs[" + std::to_string(i) + "]: expected a number");
      o.payoffs.push_back(jp[i].get<double>());
    }
    if (jo[w].contains("label")) o.label = jo[w].at("label").get<std::string>();
    outcomes.push_back(std::move(o));
  }
  const bool zs = j.value("zero_sum", false);
  return QuantumGame::from_outcomes(std::move(dims), std::move(outcomes), zs);
}

njson config_to_json(const SimulationConfig& cfg) {
  njson j;
  njson ks = njson::array();
  for (const RegularizerKernel& k : cfg.kernels) ks.push_back(k.name);
  j["kernels"] = std::move(ks);
  j["horizon"] = cfg.horizon;
  if (cfg.integrator.kind == IntegratorSpec::Kind::rk4_fixed)
    j["integrator"] = {{"type", "rk4_fixed"}, {"step", cfg.integrator.step}};
  else
    j["integrator"] = {{"type", "dopri45"},
                       {"rtol", cfg.integrator.rtol},
                       {"atol", cfg.integrator.atol}};
  j["record_stride"] = cfg.record_stride;
  j["space"] = cfg.space == FlowSpace::dual      ? "dual"
               : cfg.space == FlowSpace::primal  ? "primal"
                                                 : "quotient";
  njson mats = njson::array();
  if (!cfg.initial_scores.empty()) {
    for (const HermitianMatrix& m : cfg.initial_scores) mats.push_back(cmat_to_json(m.mat()));
    j["initial"] = {{"kind", "dual"}, {"matrices", std::move(mats)}};
  } else {
    for (const DensityMatrix& m : cfg.initial_states) mats.push_back(cmat_to_json(m.mat()));
    j["initial"] = {{"kind", "primal"}, {"matrices", std::move(mats)}};
  }
  return j;
}

SimulationConfig config_from_json(const njson& j) {
  SimulationConfig cfg;
  const njson& ks = need_array(j, "kernels", "config");
  for (size_t i = 0; i < ks.size(); ++i) {
    if (!ks[i].is_string())
      throw ValidationError("config.kernels[" + std::to_string(i) + "]: expected a name");
    cfg.kernels.push_back(make_kernel(ks[i].get<std::string>()));
  }
  cfg.horizon = need_number(j, "horizon", "config");

  if (j.contains("integrator")) {
    const njson& ji = j.at("integrator");
    const std::string type = need_string(ji, "type", "config.integrator");
    if (type == "rk4_fixed") {
      cfg.integrator.kind = IntegratorSpec::Kind::rk4_fixed;
      cfg.integrator.step = ji.value("step", 1e-3);
    } else if (type == "dopri45") {
      cfg.integrator.kind = IntegratorSpec::Kind::dopri45;
      cfg.integrator.rtol = ji.value("rtol", 1e-9);
      cfg.integrator.atol = ji.value("atol", 1e-11);
    } else {
      throw ValidationError("config.integrator.type: unknown integrator '" + type + "'");
    }
  }
  cfg.record_stride = j.value("record_stride", 0.01);

  const std::string space = j.value("space", std::string("dual"));
  if (space == "dual") cfg.space = FlowSpace::dual;
  else if (space == "primal") cfg.space = FlowSpace::primal;
  else if (space == "quotient") cfg.space = FlowSpace::quotient;
  else throw ValidationError("config.space: unknown space '" + space + "'");

  const njson& ji = need(j, "initial", "config");
  const std::string kind = need_string(ji, "kind", "config.initial");
  const njson& jm = need_array(ji, "matrices", "config.initial");
  for (size_t i = 0; i < jm.size(); ++i) {
    const std::string path = "config.initial.matrices[" + std::to_string(i) + "]";
    const CMat m = cmat_from_json(jm[i], path);
    if (kind == "dual") {
      cfg.initial_scores.push_back(HermitianMatrix::from(m));
    } else if (kind == "primal") {
      try {
        cfg.initial_states.push_back(DensityMatrix::from(m));
      } catch (const Error& e) {
        throw ValidationError(path + ": " + e.what());
      }
    } else {
      throw ValidationError("config.initial.kind: expected 'dual' or 'primal'");
    }
  }
  return cfg;
}

njson trajectory_to_json(const Trajectory& traj,
                         const std::vector<std::string>& kernel_names) {
  njson j;
  j["space"] = traj.space == FlowSpace::dual      ? "dual"
               : traj.space == FlowSpace::primal  ? "primal"
                                                  : "quotient";
  j["kernels"] = kernel_names;
  std::vector<int> dims;
  for (const DensityMatrix& s : traj.states.front()) dims.push_back(s.dim());
  j["player_dims"] = dims;
  j["times"] = traj.times;

  auto dump_series = [](const auto& series, auto&& mat_of) {
    njson out = njson::array();
    for (const auto& row : series) {
      njson r = njson::array();
      for (const auto& m : row) r.push_back(cmat_to_json(mat_of(m)));
      out.push_back(std::move(r));
    }
    return out;
  };
  j["states"] = dump_series(traj.states, [](const DensityMatrix& m) { return m.mat(); });
  j["gradients"] = dump_series(traj.gradients, [](const HermitianMatrix& m) { return m.mat(); });
  if (!traj.dual_scores.empty())
    j["dual_scores"] =
        dump_series(traj.dual_scores, [](const ScoreMatrix& m) { return m.mat.mat(); });
  return j;
}

Trajectory trajectory_from_json(const njson& j) {
  Trajectory traj;
  const std::string space = need_string(j, "space", "trajectory");
  traj.space = space == "dual"     ? FlowSpace::dual
               : space == "primal" ? FlowSpace::primal
                                   : FlowSpace::quotient;
  const njson& jt = need_array(j, "times", "trajectory");
  for (const njson& t : jt) traj.times.push_back(t.get<double>());

  const njson& js = need_array(j, "states", "trajectory");
  for (size_t t = 0; t < js.size(); ++t) {
    std::vector<DensityMatrix> row;
    for (size_t i = 0; i < js[t].size(); ++i)
      row.push_back(DensityMatrix::from(cmat_from_json(
          js[t][i], "trajectory.states[" + std::to_string(t) + "][" + std::to_string(i) + "]")));
    traj.states.push_back(std::move(row));
  }
  traj.gradients = herm_series_from_json(need_array(j, "gradients", "trajectory"),
                                         "trajectory.gradients");
  if (j.contains("dual_scores")) {
    const bool traceless = traj.space == FlowSpace::quotient;
    for (const auto& row : herm_series_from_json(j.at("dual_scores"), "trajectory.dual_scores")) {
      std::vector<ScoreMatrix> srow;
      for (const HermitianMatrix& m : row) srow.push_back(ScoreMatrix{m, traceless});
      traj.dual_scores.push_back(std::move(srow));
    }
  }
  if (traj.times.size() != traj.states.size() || traj.times.size() != traj.gradients.size())
    throw ValidationError("trajectory: times/states/gradients lengths disagree");
  return traj;
}

std::vector<std::string> trajectory_kernel_names(const njson& j) {
  std::vector<std::string> names;
  for (const njson& k : need_array(j, "kernels", "trajectory")) names.push_back(k.get<std::string>());
  return names;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = static_cast<int>(traj.states.front().size());
  os << "t";
  for (int i = 0; i < n; ++i) {
    const int d = traj.states.front()[i].dim();
    for (int k = 0; k < d; ++k) os << ",p" << i << "_eig" << k;
    os << ",p" << i << "_purity";
    if (d == 2) os << ",p" << i << "_bloch_x,p" << i << "_bloch_y,p" << i << "_bloch_z";
  }
  os << "\n";
  for (size_t t = 0; t < traj.times.size(); ++t) {
    fmt17(os, traj.times[t]);
    for (int i = 0; i < n; ++i) {
      const DensityMatrix& s = traj.states[t][i];
      const EigenDecomposition ed = hermitian_eig(s.hermitian());
      for (int k = 0; k < ed.eigenvalues.size(); ++k) {
        os << ',';
        fmt17(os, ed.eigenvalues[k]);
      }
      os << ',';
      fmt17(os, purity(s));
      if (s.dim() == 2) {
        const std::array<double, 3> b = bloch_coords(s);
        for (double v : b) {
          os << ',';
          fmt17(os, v);
        }
      }
    }
    os << "\n";
  }
}

void write_bloch_csv(std::ostream& os, const Trajectory& traj) {
  const int n = static_cast<int>(traj.states.front().size());
  os << "t";
  for (int i = 0; i < n; ++i)
    if (traj.states.front()[i].dim() == 2)
      os << ",p" << i << "_x,p" << i << "_y,p" << i << "_z";
  os << "\n";
  for (size_t t = 0; t < traj.times.size(); ++t) {
    fmt17(os, traj.times[t]);
    for (int i = 0; i < n; ++i) {
      if (traj.states[t][i].dim() != 2) continue;
      const std::array<double, 3> b = bloch_coords(traj.states[t][i]);
      for (double v : b) {
        os << ',';
        fmt17(os, v);
      }
    }
    os << "\n";
  }
}

njson regret_to_json(const RegretReport& rep) {
  njson j;
  j["horizon"] = rep.horizon;
  njson players = njson::array();
  for (const PlayerRegret& p : rep.players)
    players.push_back({{"realized", p.realized},
                       {"bound", p.bound},
                       {"best_fixed_state", cmat_to_json(p.best_fixed.mat())}});
  j["players"] = std::move(players);
  return j;
}

njson conservation_to_json(const ConservationReport& rep) {
  return njson{{"times", rep.times}, {"values", rep.values}, {"max_drift", rep.max_drift}};
}

njson recurrence_to_json(const RecurrenceReport& rep) {
  njson j{{"r_out", rep.r_out},
          {"departed", rep.departed},
          {"return_distance", rep.return_distance}};
  j["departure_time"] = rep.departed ? njson(*rep.departure_time) : njson(nullptr);
  return j;
}

njson vsprobe_to_json(const VsProbeReport& rep) {
  return njson{{"margin", rep.margin},
               {"radius", rep.radius},
               {"samples", rep.samples},
               {"seed", rep.seed}};
}

}  // namespace qflow
