#include "sprobe/parallel.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace sprobe {

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sprobe
