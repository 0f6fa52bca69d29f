#include <iostream>

#include "pdiff_cli/commands.hpp"

int main(int argc, char** argv) { return pdiff_cli::run(argc, argv, std::cout, std::cerr); }
