#include <iostream>
#include <string>
#include <vector>

#include "nahmflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return nahmflow::cli::main(args, std::cout, std::cerr);
}
