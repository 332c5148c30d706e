#include <iostream>

#include "gqmc/cli.hpp"

int main(int argc, char** argv) { return gqmc::run_cli(argc, argv, std::cout, std::cerr); }
