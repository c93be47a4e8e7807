#include <iostream>

#include "bracketlab/cli.hpp"

int main(int argc, char** argv) { return bracketlab::cli::run(argc, argv, std::cout, std::cerr); }
