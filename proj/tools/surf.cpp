#include <iostream>

#include "surf/cli.hpp"

int main(int argc, char** argv) { return surf::cli::run(argc, argv, std::cout, std::cerr); }
