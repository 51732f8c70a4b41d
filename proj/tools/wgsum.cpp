#include <iostream>

#include "wgsum/cli.hpp"

int main(int argc, char** argv) { return wgsum::run_cli(argc, argv, std::cout, std::cerr); }
