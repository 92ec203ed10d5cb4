#include "treesv/cli.hpp"

int main(int argc, char** argv) { return treesv::run_cli(argc, argv); }
