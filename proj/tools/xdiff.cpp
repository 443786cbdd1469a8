#include <iostream>

#include "xdiff/cli.hpp"

int main(int argc, char** argv) { return xdiff::cli::run(argc, argv, std::cout, std::cerr); }
