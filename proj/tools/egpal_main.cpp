#include <iostream>
#include <string>
#include <vector>

#include "egpal/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return egpal::cli_main(args, std::cout, std::cerr);
}
