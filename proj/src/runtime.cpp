#include "crlkit/runtime.hpp"

#include <Eigen/Core>
#include <cstdlib>
#include <thread>

namespace crlkit {

void init_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* cap = std::getenv("CRLKIT_THREADS")) {
        int c = std::atoi(cap);
        if (c >= 1 && c < n) n = c;
        if (c >= 1 && c > n) n = c;
    }
    Eigen::setNbThreads(n);
}

int thread_count() { return Eigen::nbThreads(); }

}  // namespace crlkit
