#pragma once

#include <cstddef>
#include <exception>

namespace prml {

/// Cap on OpenMP threads used by the parallel drivers; 0 leaves the runtime default.
void set_workers(int workers);
int max_workers();

/// Calls body(i) for i in [0, n) across OpenMP threads. Each index must
/// write only its own outputs. The first exception thrown is rethrown on
/// the calling thread after the loop.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    std::exception_ptr error;
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(prml_parallel_for_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace prml
