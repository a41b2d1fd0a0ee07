#include <iostream>

#include "uvwprop/cli.hpp"

int main(int argc, char** argv) { return uvwprop::cli_main(argc, argv, std::cout, std::cerr); }
