#include <iostream>

#include "veriscribe/cli.hpp"

int main(int argc, char** argv) { return veriscribe::cli::run(argc, argv, std::cout, std::cerr); }
