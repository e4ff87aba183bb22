#include <iostream>

#include "dfsim/cli/app.hpp"

int main(int argc, char** argv) { return dfsim::cli::run(argc, argv, std::cout, std::cerr); }
