#include <iostream>

#include "pkboin/cli.hpp"

int main(int argc, char** argv) { return pkboin::cli_main(argc, argv, std::cout, std::cerr); }
