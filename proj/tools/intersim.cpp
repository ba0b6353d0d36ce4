#include "intersim/cli.hpp"

int main(int argc, char** argv) { return intersim::cli::main(argc, argv); }
