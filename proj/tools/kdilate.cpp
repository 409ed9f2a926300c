#include "kdilate/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return kdilate::cli::run(argc, argv, std::cout, std::cerr); }
