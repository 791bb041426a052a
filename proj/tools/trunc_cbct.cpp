#include <iostream>

#include "tcbct/cli.hpp"

int main(int argc, char** argv) { return tcbct::cli::run(argc, argv, std::cout, std::cerr); }
