#include "ivkit/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ivkit::cli::run(argc, argv, std::cout, std::cerr); }
