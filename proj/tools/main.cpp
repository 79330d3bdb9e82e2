#include <iostream>

#include "infodens/cli.hpp"

int main(int argc, char** argv) { return infodens::cli::run(argc, argv, std::cout, std::cerr); }
