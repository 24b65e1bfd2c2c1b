#include <iostream>

#include "slowpassage/cli.hpp"

int main(int argc, char** argv) { return sp::cli_main(argc, argv, std::cout, std::cerr); }
