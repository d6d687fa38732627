#include <iostream>
#include <string>
#include <vector>

#include "specsense/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return specsense::cli::main_entry(args, std::cout, std::cerr);
}
