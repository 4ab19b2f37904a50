#include <iostream>
#include <string>
#include <vector>

#include "latent/cli.hpp"

int main(int argc, char** argv) {
  latent::ApplyThreadOverride();
  std::vector<std::string> args(argv + 1, argv + argc);
  return latent::RunCli(args, std::cout, std::cerr);
}
