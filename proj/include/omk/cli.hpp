#pragma once
// Command-line front end. Every flag mirrors a key of the JSON config:
// underscores become dashes and multi-letter keys are lower-cased, so
// delta_OM <-> --delta-om and G <-> --G.
//
// Config layout:
//   { "command": "chern", "output_dir": "out", "threads": 4, "seed": 1,
//     "params": { "G": 2, "delta_OM": 3, ... },
//     "chern": { "grid": 48 } }
//
// Exit codes: 0 success, 2 invalid input (nothing written), 3 numerical failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace omk {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace omk
