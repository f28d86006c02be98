#include <iostream>

#include "copart/cli.hpp"

int main(int argc, char** argv) { return copart::cli::run(argc, argv, std::cout, std::cerr); }
