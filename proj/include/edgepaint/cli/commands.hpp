#pragma once

namespace ep::cli {

// Subcommands: train, infer, eval, maskgen.
// Exit codes: 0 ok, 2 config error, 3 data/io error, 4 numeric abort,
// 5 checkpoint error.
int run(int argc, char** argv);

}  // namespace ep::cli
