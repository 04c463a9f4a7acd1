#include <iostream>

#include "gccg/harness/cli.hpp"

int main(int argc, char** argv) { return gccg::harness::run_cli(argc, argv, std::cout, std::cerr); }
