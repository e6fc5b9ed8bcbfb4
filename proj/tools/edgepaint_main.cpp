#include "edgepaint/cli/commands.hpp"

int main(int argc, char** argv) { return ep::cli::run(argc, argv); }
