#include <iostream>

#include "advmask/cli.hpp"

int main(int argc, char** argv) {
  return advmask::run_cli(argc, argv, std::cout, std::cerr);
}
