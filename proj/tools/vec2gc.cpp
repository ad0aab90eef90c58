#include <iostream>

#include "vec2gc/cli.hpp"

int main(int argc, char** argv) {
  return vec2gc::run_cli(argc, argv, std::cout, std::cerr);
}
