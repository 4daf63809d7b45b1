#pragma once

namespace mgan {

// OpenBLAS picks its kernel set from the environment before main() runs, and
// Ubuntu's build misdetects newer x86 cores (falling back to a slow generic
// kernel). This re-execs the current process once with OPENBLAS_CORETYPE set
// to the best supported microarch. Call it first thing in main(); it is a
// no-op when the variable is already set or the CPU needs no override.
void blas_env_reexec(int argc, char** argv);

}  // namespace mgan
