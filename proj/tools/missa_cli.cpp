#include <iostream>

#include "missa/app/cli.hpp"

int main(int argc, char** argv) {
  return missa::app::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
