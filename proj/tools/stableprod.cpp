#include <iostream>

#include "stableprod/cli.hpp"

int main(int argc, char** argv) {
  return stableprod::cli::main(argc, argv, std::cout, std::cerr);
}
