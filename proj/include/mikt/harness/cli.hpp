#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mikt::harness {

// Subcommands: pretrain, train, eval, recipe, list-envs. Returns 0 on
// success; otherwise prints a one-line diagnostic to err and returns
// nonzero (2 for bad usage, 1 for runtime failures).
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace mikt::harness
