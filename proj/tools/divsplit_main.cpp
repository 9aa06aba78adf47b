#include <iostream>
#include <string>
#include <vector>

#include "divsplit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return divsplit::cli::run(args, std::cout, std::cerr);
}
