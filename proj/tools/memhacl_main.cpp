#include <vector>

#include "memhacl/cli.hpp"

int main(int argc, char** argv) {
  return memhacl::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
