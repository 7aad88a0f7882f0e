#include <iostream>

#include "trackcert/cli.hpp"

int main(int argc, char** argv) { return trackcert::run_cli(argc, argv, std::cout, std::cerr); }
