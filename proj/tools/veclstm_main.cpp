#include <iostream>

#include "veclstm/cli.hpp"

int main(int argc, char** argv) { return veclstm::cli::run(argc, argv, std::cout, std::cerr); }
