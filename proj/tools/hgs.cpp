#include <iostream>
#include <string>
#include <vector>

#include "hgs/cli.hpp"

int main(int argc, char** argv) {
  return hgs::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
