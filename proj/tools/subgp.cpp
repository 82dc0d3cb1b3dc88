#include <string>
#include <vector>

#include "subgp/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return subgp::cli::run(args);
}
