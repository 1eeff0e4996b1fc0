#include "mpc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mpc::cli::run(argc, argv, std::cout, std::cerr); }
