#include <iostream>

#include "shiftex/cli.hpp"

int main(int argc, char** argv) { return shiftex::cli::run(argc, argv, std::cout, std::cerr); }
