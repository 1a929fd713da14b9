#pragma once

namespace sprobe {

enum class Exec { serial, parallel };

// Runs body(i) for i in [0, n). With Exec::parallel the iterations are
// distributed over OpenMP threads (static schedule); each iteration must
// write disjoint outputs so the result is independent of the schedule.
template <class Body>
void parallel_for(Exec exec, int n, Body&& body) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int i = 0; i < n; ++i) body(i);
#else
  (void)exec;
  for (int i = 0; i < n; ++i) body(i);
#endif
}

// Number of threads a parallel region would use.
int max_threads();

}  // namespace sprobe
