#include <iostream>
#include <string>
#include <vector>

#include "foldmap/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return foldmap::run_cli(args, std::cout, std::cerr);
}
