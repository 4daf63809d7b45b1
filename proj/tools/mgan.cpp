#include "mgan/blas_env.hpp"
#include "mgan/cli.hpp"

int main(int argc, char** argv) {
  mgan::blas_env_reexec(argc, argv);
  return mgan::run_cli(argc, argv);
}
