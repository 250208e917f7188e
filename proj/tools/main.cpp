#include <string>
#include <vector>

#include "elastigraph/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return elastigraph::run_cli(args);
}
