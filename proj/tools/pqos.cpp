#include <iostream>

#include "pqos/cli.hpp"

int main(int argc, char** argv) {
  return pqos::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
