#include <iostream>
#include <string>
#include <vector>

#include "tskfnn/cli.hpp"

int main(int argc, char** argv) {
  return tskfnn::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
