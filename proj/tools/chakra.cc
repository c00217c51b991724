#include <iostream>

#include "chakra/cli/cli.h"

int main(int argc, char** argv) {
  return chakra::run_cli(std::vector<std::string>(argv, argv + argc), std::cout,
                         std::cerr);
}
