#include "mgan/blas_env.hpp"

#include <cstdlib>
#include <unistd.h>

namespace mgan {

void blas_env_reexec(int argc, char** argv) {
  (void)argc;
#if defined(__x86_64__)
  if (getenv("OPENBLAS_CORETYPE")) return;
  const char* core = nullptr;
  if (__builtin_cpu_supports("avx512f"))
    core = "SKYLAKEX";
  else if (__builtin_cpu_supports("avx2"))
    core = "HASWELL";
  if (!core) return;
  setenv("OPENBLAS_CORETYPE", core, 0);
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  execv("/proc/self/exe", argv);
  // exec failed: continue with the default (slower) kernels
#else
  (void)argv;
#endif
}

}  // namespace mgan
