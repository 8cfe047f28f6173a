#include <iostream>
#include <string>
#include <vector>

#include "selfrep/cli.hpp"

int main(int argc, char** argv) {
  return selfrep::cli::main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
