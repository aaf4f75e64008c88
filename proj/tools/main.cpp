#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return respq::run_cli({argv, argv + argc}, std::cout, std::cerr); }
