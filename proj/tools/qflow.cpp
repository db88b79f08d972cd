#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qflow/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regularized learning flows on density matrices"};
  app.require_subcommand(1);

  std::string sim_manifest, diag_manifest;
  bool loose = false;

  CLI::App* sim = app.add_subcommand("simulate", "Integrate a run manifest and write trajectory files");
  sim->add_option("manifest", sim_manifest, "Path to a run manifest (JSON)")->required();

  CLI::App* diag = app.add_subcommand("diagnose", "Run a manifest and write the requested report files");
  diag->add_option("manifest", diag_manifest, "Path to a run manifest (JSON)")->required();

  CLI::App* ver = app.add_subcommand("verify", "Run the built-in property checks");
  ver->add_flag("--loose", loose, "Relax tolerances 10x for slow machines");

  CLI11_PARSE(app, argc, argv);

  return qflow::guarded(
      [&]() -> int {
        if (sim->parsed()) return qflow::cmd_simulate(qflow::manifest_from_file(sim_manifest));
        if (diag->parsed()) return qflow::cmd_diagnose(qflow::manifest_from_file(diag_manifest));
        return qflow::cmd_verify(loose, std::cout);
      },
      std::cerr);
}
