#include <iostream>

#include "abk/frontend/commands.hpp"

int main(int argc, char** argv) { return abk::frontend::run_cli(argc, argv, std::cout, std::cerr); }
