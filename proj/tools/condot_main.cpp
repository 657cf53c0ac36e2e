#include <iostream>

#include "condot/cli.hpp"

int main(int argc, char** argv) { return condot::cli::run(argc, argv, std::cout, std::cerr); }
