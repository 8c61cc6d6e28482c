#include <iostream>

#include "conslaw/cli.hpp"

int main(int argc, char** argv) { return conslaw::cli::main(argc, argv, std::cout, std::cerr); }
