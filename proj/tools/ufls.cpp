#include <iostream>
#include <string>
#include <vector>

#include "ufls/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ufls::run_cli(args, std::cout, std::cerr);
}
