#include <iostream>
#include <string>
#include <vector>

#include "pdlab/experiment.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pdlab::cli::main_entry(args, std::cout, std::cerr);
}
