#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return hmmgraph::cli::cli_main(argc, argv, std::cout, std::cerr); }
