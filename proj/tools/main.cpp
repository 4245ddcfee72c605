#include "averimatec/service/cli.hpp"

int main(int argc, char** argv) {
  return averimatec::service::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
