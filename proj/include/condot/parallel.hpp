#pragma once

#include <functional>

#include <Eigen/Core>

namespace condot {

/// Worker count: the CONDOT_THREADS environment variable if set (>= 1),
/// otherwise the hardware concurrency.
int thread_count();
/// Overrides the worker count for this process; 0 restores the default.
void set_thread_count(int n);

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once; results must not depend on the chunking.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& body,
                  Eigen::Index min_chunk = 64);

}  // namespace condot
