#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diftgame/simulator.hpp"
#include "diftgame/value_net.hpp"
#include "diftgame/vi_solver.hpp"

namespace diftgame::cli {

// Runs one subcommand. Exit 0 on success, 1 on domain errors (structured
// JSON on stderr), 2 on usage errors.
int dispatch(const std::vector<std::string>& args);

// Plot-data emission: CSV with a header row, one row per iteration / epoch /
// sweep point.
std::string solve_plotdata(const SolveReport& report);
std::string train_plotdata(const TrainReport& report);
std::string sweep_plotdata(const std::vector<std::pair<double, double>>& beta_mu);

}  // namespace diftgame::cli
