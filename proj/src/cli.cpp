#include "qflow/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "qflow/errors.hpp"
#include "qflow/verify.hpp"

namespace qflow {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

njson parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return njson::parse(in);
  } catch (const njson::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << body;
}

DiagnosticSpec diagnostic_from_json(const njson& j) {
  DiagnosticSpec d;
  if (j.is_string()) {
    d.name = j.get<std::string>();
  } else if (j.is_object()) {
    if (!j.contains("name") || !j["name"].is_string())
      throw ValidationError("diagnostics[]: object form needs a string 'name'");
    d.name = j["name"].get<std::string>();
    if (j.contains("r_out")) d.r_out = j["r_out"].get<double>();
    if (j.contains("radius")) d.radius = j["radius"].get<double>();
    if (j.contains("samples")) d.samples = j["samples"].get<int>();
    if (j.contains("reference")) {
      int idx = 0;
      for (const njson& m : j["reference"])
        d.reference.push_back(
            cmat_from_json(m, "diagnostics.reference[" + std::to_string(idx++) + "]"));
    }
  } else {
    throw ValidationError("diagnostics[]: expected string or object");
  }
  static const std::set<std::string> known = {"regret", "fenchel", "recurrence",
                                             "vsprobe", "bloch"};
  if (!known.count(d.name))
    throw ValidationError("diagnostics[]: unknown diagnostic '" + d.name + "'");
  if (d.samples <= 0) throw ValidationError("diagnostics[]: samples must be positive");
  if (d.radius <= 0.0) throw ValidationError("diagnostics[]: radius must be positive");
  if (d.r_out <= 0.0) throw ValidationError("diagnostics[]: r_out must be positive");
  return d;
}

StateProfile uniform_profile(const QuantumGame& g) {
  StateProfile p;
  for (int d : g.player_dims()) p.states.push_back(DensityMatrix::uniform(d));
  return p;
}

StateProfile profile_from_mats(const std::vector<CMat>& mats) {
  StateProfile p;
  for (const CMat& m : mats)
    p.states.push_back(DensityMatrix::from(HermitianMatrix::from(m)));
  return p;
}

std::vector<std::string> kernel_names(const SimulationConfig& cfg) {
  std::vector<std::string> names;
  for (const RegularizerKernel& k : cfg.kernels) names.push_back(k.name);
  return names;
}

njson metadata_json(const RunManifest& m, const Trajectory& traj, double wall_seconds) {
  njson j;
  j["tool"] = "qflow";
  j["version"] = kVersion;
  j["game_path"] = m.game_path.string();
  j["seed"] = m.seed;
  j["config"] = config_to_json(m.config);
  j["records"] = traj.times.size();
  j["wall_time_seconds"] = wall_seconds;
  return j;
}

}  // namespace

RunManifest manifest_from_json(const njson& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("manifest: expected a JSON object");
  if (!j.contains("game_path") || !j["game_path"].is_string())
    throw ValidationError("manifest.game_path: required string");
  if (!j.contains("config")) throw ValidationError("manifest.config: required object");

  RunManifest m;
  m.game_path = resolve(base_dir, j["game_path"].get<std::string>());
  m.config = config_from_json(j["config"]);
  if (j.contains("diagnostics"))
    for (const njson& d : j["diagnostics"]) m.diagnostics.push_back(diagnostic_from_json(d));
  m.output_dir = resolve(base_dir, j.contains("output_dir")
                                       ? fs::path(j["output_dir"].get<std::string>())
                                       : fs::path("out"));
  if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
  return m;
}

RunManifest manifest_from_file(const fs::path& path) {
  return manifest_from_json(parse_file(path), fs::absolute(path).parent_path());
}

QuantumGame load_game(const fs::path& path) {
  try {
    return game_from_json(parse_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

int cmd_simulate(const RunManifest& m) {
  const QuantumGame g = load_game(m.game_path);
  const auto t0 = std::chrono::steady_clock::now();
  const Trajectory traj = integrate(g, m.config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(m.output_dir);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_text(m.output_dir / "trajectory.csv", csv.str());
  // Compact dump: trajectory files are machine-read and get large.
  write_text(m.output_dir / "trajectory.json",
             trajectory_to_json(traj, kernel_names(m.config)).dump() + "\n");
  write_text(m.output_dir / "run_metadata.json", metadata_json(m, traj, wall).dump(2) + "\n");
  return 0;
}

int cmd_diagnose(const RunManifest& m) {
  const QuantumGame g = load_game(m.game_path);
  const Trajectory traj = integrate(g, m.config);
  fs::create_directories(m.output_dir);

  for (const DiagnosticSpec& d : m.diagnostics) {
    if (d.name == "regret") {
      write_text(m.output_dir / "regret.json",
                 regret_to_json(regret(traj, m.config.kernels)).dump(2) + "\n");
    } else if (d.name == "fenchel") {
      const StateProfile ref =
          d.reference.empty() ? uniform_profile(g) : profile_from_mats(d.reference);
      write_text(m.output_dir / "fenchel.json",
                 conservation_to_json(fenchel_series(traj, m.config.kernels, ref)).dump(2) +
                     "\n");
    } else if (d.name == "recurrence") {
      write_text(m.output_dir / "recurrence.json",
                 recurrence_to_json(recurrence_stats(traj, d.r_out)).dump(2) + "\n");
    } else if (d.name == "vsprobe") {
      StateProfile center;
      if (d.reference.empty())
        center.states = traj.states.back();
      else
        center = profile_from_mats(d.reference);
      write_text(m.output_dir / "vsprobe.json",
                 vsprobe_to_json(vs_probe(g, center, d.radius, d.samples, m.seed)).dump(2) +
                     "\n");
    } else if (d.name == "bloch") {
      bool any_qubit = false;
      for (int dim : g.player_dims()) any_qubit = any_qubit || dim == 2;
      if (!any_qubit)
        throw MissingDataError("bloch diagnostic: no 2x2 player states in this game");
      std::ostringstream csv;
      write_bloch_csv(csv, traj);
      write_text(m.output_dir / "bloch.csv", csv.str());
    }
  }
  return 0;
}

int cmd_verify(bool loose, std::ostream& os) {
  const VerifyOptions opts{loose ? 10.0 : 1.0};
  const std::vector<CheckResult> results = run_verification(opts);
  int failures = 0;
  for (const CheckResult& r : results) {
    os << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << "  (" << r.detail << ", "
       << std::fixed << std::setprecision(2) << r.seconds << "s)\n";
    os.unsetf(std::ios::floatfield);
    if (!r.passed) ++failures;
  }
  os << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
     << "\n";
  return failures == 0 ? 0 : 1;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const IntegrationError& e) {
    err << "integration error: " << e.what() << "\n";
    return 3;
  } catch (const MissingDataError& e) {
    err << "missing data: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const njson::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qflow
