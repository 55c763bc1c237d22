#include <iostream>

#include "cregmm/cli.hpp"

int main(int argc, char** argv) { return cregmm::run_cli(argc, argv, std::cout, std::cerr); }
