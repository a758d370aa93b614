#include <iostream>

#include "mmorder/cli.hpp"

int main(int argc, char** argv) {
  return mmorder::cli::run(argc, argv, std::cout, std::cerr);
}
