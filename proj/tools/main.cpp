#include <iostream>

#include "peakstore/cli.hpp"

int main(int argc, char** argv) {
  return peakstore::cli::RunCli(argc, argv, std::cout, std::cerr);
}
