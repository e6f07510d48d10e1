#include <iostream>

#include "dsmplan/cli.hpp"

int main(int argc, char** argv) {
  return dsmplan::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
