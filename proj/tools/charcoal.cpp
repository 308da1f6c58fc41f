#include <iostream>
#include <string>
#include <vector>

#include "charcoal/cli.hpp"

int main(int argc, char** argv) {
  return charcoal::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
