#include <iostream>

#include "elsa/cli.hpp"

int main(int argc, char** argv) {
  return elsa::cli::run(argc, argv, std::cout, std::cerr);
}
