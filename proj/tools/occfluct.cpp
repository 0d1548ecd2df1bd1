#include "occ/app.hpp"

#include <iostream>

int main(int argc, char **argv) { return occ::run_cli(argc, argv, std::cout, std::cerr); }
