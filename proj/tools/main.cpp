#include <iostream>

#include "sphdir/cli.hpp"

int main(int argc, char** argv) { return sphdir::cli_dispatch(argc, argv, std::cout, std::cerr); }
