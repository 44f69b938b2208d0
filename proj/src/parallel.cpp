#include "snapcube/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

namespace snapcube {
namespace {

int initial_threads() {
    if (const char* env = std::getenv("SNAPCUBE_NUM_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{initial_threads()};
    return cap;
}

}  // namespace

int num_threads() { return thread_cap().load(std::memory_order_relaxed); }

void set_num_threads(int n) { thread_cap().store(std::max(1, n), std::memory_order_relaxed); }

}  // namespace snapcube
