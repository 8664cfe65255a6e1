#include <iostream>
#include <string>
#include <vector>

#include "acrotag/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return acrotag::run_cli(args, std::cout, std::cerr);
}
