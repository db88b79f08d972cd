#pragma once

#include <iosfwd>

#include "json.hpp"
#include "qflow/analysis.hpp"

namespace qflow {

using njson = nlohmann::json;

/* JSON conventions: a complex scalar is [re, im]; a matrix is a row-major
 * nested array of those.  Parsers throw ValidationError naming the
 * offending field via the `path` argument. */

njson cmat_to_json(const CMat& m);
CMat cmat_from_json(const njson& j, const std::string& path);

njson game_to_json(const QuantumGame& g);
// Accepts either the explicit {player_dims, outcomes[], zero_sum} form or
// the {classical_tables: [...]} shortcut (nested per-player payoff arrays).
QuantumGame game_from_json(const njson& j);

njson config_to_json(const SimulationConfig& cfg);
SimulationConfig config_from_json(const njson& j);

njson trajectory_to_json(const Trajectory& traj,
                         const std::vector<std::string>& kernel_names);
Trajectory trajectory_from_json(const njson& j);
std::vector<std::string> trajectory_kernel_names(const njson& j);

// One row per record time: t, then per player the descending eigenvalues,
// purity, and for qubits the Bloch coordinates.  17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
// t plus per-qubit-player Bloch coordinates.
void write_bloch_csv(std::ostream& os, const Trajectory& traj);

njson regret_to_json(const RegretReport& rep);
njson conservation_to_json(const ConservationReport& rep);
njson recurrence_to_json(const RecurrenceReport& rep);
njson vsprobe_to_json(const VsProbeReport& rep);

}  // namespace qflow
