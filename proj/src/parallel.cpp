#include "prml/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace prml {

void set_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

int max_workers() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace prml
