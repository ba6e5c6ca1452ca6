#include <iostream>

#include "railcrowd/cli.hpp"

int main(int argc, char** argv) {
  return railcrowd::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
