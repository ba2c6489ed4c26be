#include <iostream>

#include "vclone/cli.hpp"

int main(int argc, char** argv) { return vclone::cli::run(argc, argv, std::cout, std::cerr); }
