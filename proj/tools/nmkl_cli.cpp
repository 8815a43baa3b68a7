#include "nmkl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return nmkl::cli_main(argc, argv, std::cout, std::cerr); }
