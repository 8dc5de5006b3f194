#pragma once

namespace field_econ {

// Subcommands simulate, solve, kernel, phase-diagram, validate. Returns 0 on
// success, 1 on a runtime failure and 2 on a usage or config error.
int cli_main(int argc, char** argv);

}  // namespace field_econ
