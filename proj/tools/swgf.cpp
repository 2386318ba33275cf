#include <iostream>

#include "swgf/cli.hpp"

int main(int argc, char** argv) {
  return swgf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
