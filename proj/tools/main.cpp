#include <iostream>

#include "lexd_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lexd::cli::run(args, std::cout, std::cerr);
}
