#include <string>
#include <vector>

#include "hlqr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hlqr::cli_main(args);
}
