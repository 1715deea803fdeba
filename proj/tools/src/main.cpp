#include <iostream>

#include "nhits/cli.hpp"

int main(int argc, char** argv) { return nhits::cli::run(argc, argv, std::cout, std::cerr); }
