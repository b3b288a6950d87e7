#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace unlearn {

// All data-parallel loops in this project run through parallel_for so that a
// serial reference path is always available. Every iteration must write only
// to its own slot; reductions happen afterwards in index order, which makes
// results bitwise identical across modes and thread counts.
enum class ExecMode { Serial, OpenMP };

ExecMode default_exec_mode();
void set_default_exec_mode(ExecMode mode);

// Requested worker count for OpenMP mode; 0 keeps the runtime default.
void set_worker_count(int workers);
int worker_count();

template <typename Fn>
void parallel_for(std::int64_t n, ExecMode mode, Fn&& fn) {
  if (mode == ExecMode::OpenMP) {
#ifdef _OPENMP
    const int workers = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(workers > 0 ? workers : omp_get_max_threads())
    for (std::int64_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
#endif
  }
  for (std::int64_t i = 0; i < n; ++i) {
    fn(i);
  }
}

template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  parallel_for(n, default_exec_mode(), static_cast<Fn&&>(fn));
}

}  // namespace unlearn
