#include <iostream>

#include "wsketch/cli.hpp"

int main(int argc, char** argv) {
  return wsketch::cli::run(argc, argv, std::cout, std::cerr);
}
