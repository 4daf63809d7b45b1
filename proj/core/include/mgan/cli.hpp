#pragma once

namespace mgan {

// Single entry-point dispatch for {phantom, train, predict, uncertainty,
// evaluate}. Returns 0 on success, 1 on usage errors, 2 on runtime errors.
int run_cli(int argc, const char* const* argv);

}  // namespace mgan
