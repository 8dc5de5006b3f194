#include "field_econ/cli.hpp"

int main(int argc, char** argv) { return field_econ::cli_main(argc, argv); }
