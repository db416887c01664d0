#include <iostream>

#include "hbm/cli.hpp"

int main(int argc, char** argv) {
  return hbm::run_cli(argc, argv, std::cout, std::cerr);
}
