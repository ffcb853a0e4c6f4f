#pragma once

namespace facemimic::cli {

/// Parses arguments and runs one subcommand. Returns the process exit status.
int run(int argc, char** argv);

}  // namespace facemimic::cli
