#include "stable_degen/cli.hpp"

int main(int argc, char** argv) { return stable_degen::cli::main_entry(argc, argv); }
