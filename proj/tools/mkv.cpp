#include <iostream>

#include "mkv/cli.hpp"

int main(int argc, char** argv) { return mkv::cli::run(argc, argv, std::cout, std::cerr); }
