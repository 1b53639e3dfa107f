#pragma once

#include "pinn/config.hpp"
#include "pinn/types.hpp"

namespace pinn {

// Pipeline stages. Each writes its outputs under <out_dir>/<stage>/ together
// with the resolved config and a content hash of its inputs, so a run can be
// replayed exactly. Stages read earlier stages' outputs and throw
// MissingArtifact when a dependency has not been produced yet.
void cmd_generate(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_bench(const RunConfig& config);
void cmd_simulate(const RunConfig& config, const Vec& x0);

// Argument parsing and dispatch for the pinn binary. Exit codes: 0 success,
// 2 configuration error, 3 missing stage artifact, 4 numerical failure,
// 1 any other error. Every failure prints one line to stderr:
//   pinn: error: <category>: <message>
int run_cli(int argc, const char* const* argv);

}  // namespace pinn
