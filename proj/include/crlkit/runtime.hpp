#pragma once

namespace crlkit {

/// Applies the CRLKIT_THREADS cap (default: hardware concurrency) to the
/// linear-algebra backend. Call once at process start.
void init_threads();

/// Number of threads the backend is configured with.
int thread_count();

}  // namespace crlkit
