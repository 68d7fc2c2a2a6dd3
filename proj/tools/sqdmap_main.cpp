#include "sqdmap/cli_commands.hpp"

int main(int argc, char** argv) { return sqdmap::cli::run(argc, argv); }
