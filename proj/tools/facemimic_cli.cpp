#include "cli_commands.hpp"

int main(int argc, char** argv) { return facemimic::cli::run(argc, argv); }
