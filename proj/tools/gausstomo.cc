#include <iostream>
#include <string>
#include <vector>

#include "gausstomo/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gausstomo::cli::run(args, std::cout, std::cerr);
}
