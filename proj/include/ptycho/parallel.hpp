#pragma once

namespace ptycho {

// Worker count for per-frame loops: OpenMP's default, capped by the
// PTYCHO_DRS_THREADS environment variable and by set_thread_cap().
int worker_threads();

// 0 removes the programmatic cap.
void set_thread_cap(int threads);

}  // namespace ptycho
