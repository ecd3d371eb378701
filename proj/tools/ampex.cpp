#include "cli/commands.hpp"

int main(int argc, char** argv) { return ampex::cli::run_main(argc, argv); }
