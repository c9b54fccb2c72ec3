#include <iostream>

#include "didint/cli.hpp"

int main(int argc, char** argv) { return didint::cli::run(argc, argv, std::cout, std::cerr); }
