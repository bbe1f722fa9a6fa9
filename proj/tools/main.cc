#include <iostream>
#include <string>
#include <vector>

#include "lpvh2_cli.h"

int main(int argc, char** argv) {
  return lpvh2::cli::run(std::vector<std::string>(argv + 1, argv + argc),
                         std::cout, std::cerr);
}
