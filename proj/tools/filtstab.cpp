#include <iostream>

#include "filtstab/cli.hpp"

int main(int argc, char** argv) { return filtstab::cli::dispatch(argc, argv, std::cout, std::cerr); }
