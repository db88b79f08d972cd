#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qflow/analysis.hpp"
#include "qflow/dynamics.hpp"
#include "qflow/game.hpp"
#include "qflow/serialize.hpp"

namespace qflow {

/* One requested report.  `reference` doubles as the Fenchel reference
 * profile and the vs-probe center; empty means use the default (uniform
 * profile for fenchel, final recorded state for vsprobe). */
struct DiagnosticSpec {
  std::string name;  // regret | fenchel | recurrence | vsprobe | bloch
  double r_out = 0.1;
  double radius = 0.1;
  int samples = 500;
  std::vector<CMat> reference;
};

struct RunManifest {
  std::filesystem::path game_path;
  SimulationConfig config;
  std::vector<DiagnosticSpec> diagnostics;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
};

/* Relative paths in the manifest resolve against `base_dir` (the manifest's
 * directory when loaded from disk). */
RunManifest manifest_from_json(const njson& j, const std::filesystem::path& base_dir);
RunManifest manifest_from_file(const std::filesystem::path& path);

QuantumGame load_game(const std::filesystem::path& path);

// Writes trajectory.csv, trajectory.json, run_metadata.json into output_dir.
int cmd_simulate(const RunManifest& m);

// Writes one report file per requested diagnostic into output_dir.
int cmd_diagnose(const RunManifest& m);

// Prints one line per property check; returns 0 iff all pass.
int cmd_verify(bool loose, std::ostream& os);

/* Runs `body`, mapping library errors to process exit codes:
 * validation/domain 2, integration 3, missing data 4, anything else 1. */
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace qflow
