#include "crn/cli.hpp"

int main(int argc, char** argv) {
  return crn::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
