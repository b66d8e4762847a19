#include <iostream>

#include "sbmc/cli.hpp"

int main(int argc, char** argv) { return sbmc::cli::run(argc, argv, std::cout, std::cerr); }
