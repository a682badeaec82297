#include "proxy3d/cli.hpp"

int main(int argc, char** argv) {
  return proxy3d::cli::run(argc, argv);
}
