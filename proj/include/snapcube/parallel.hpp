#pragma once

#include <cstddef>

namespace snapcube {

/// Thread cap for library loops. Initialised from SNAPCUBE_NUM_THREADS when set.
int num_threads();
void set_num_threads(int n);

/// Runs body(i) for i in [0, n). Every i is handled by exactly one thread and
/// callers only write outputs owned by i, so results do not depend on the
/// thread count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const auto count = static_cast<long long>(n);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(num_threads())
#endif
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace snapcube
