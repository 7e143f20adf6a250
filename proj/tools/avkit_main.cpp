#include <iostream>

#include "avkit/cli/app.hpp"

int main(int argc, char** argv) { return avkit::cli::run(argc, argv, std::cout, std::cerr); }
