#include <string>
#include <vector>

#include "cmpe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cmpe::cli::run(args);
}
