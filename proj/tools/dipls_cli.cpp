#include <vector>

#include "dipls/cli.hpp"

int main(int argc, char** argv) {
  return dipls::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
