#include <iostream>
#include <string>
#include <vector>

#include "dualrl/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return dualrl::run_cli(args, std::cout, std::cerr);
}
