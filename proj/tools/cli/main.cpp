#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return ssrgan::cli::run(argc, argv, std::cout, std::cerr); }
