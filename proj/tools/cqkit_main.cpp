#include <iostream>

#include "cqkit/cli.hpp"

int main(int argc, char **argv) {
  return cqkit::run_cli(std::vector<std::string>(argv, argv + argc), std::cout,
                        std::cerr);
}
