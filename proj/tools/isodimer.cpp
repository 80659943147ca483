// Command-line front end; subcommands are wired up in cli.hpp.
#include "isodimer/cli.hpp"

int main(int argc, char** argv) { return isodimer::cli::run(argc, argv); }
