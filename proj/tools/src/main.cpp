#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return gmmsgd::cli::run(argc, argv, std::cout, std::cerr); }
