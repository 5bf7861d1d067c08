#include "realogic/cli.hpp"

int main(int argc, char** argv) {
  return realogic::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
