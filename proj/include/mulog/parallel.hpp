#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mulog {

// Process-wide worker count. 0 means "use hardware_concurrency".
// Every parallel construct in the library must produce results that do not
// depend on this value; only wall time may change.
void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) over disjoint chunks of [0, n). Chunk boundaries depend
// only on n, never on the worker count, so per-chunk outputs are reproducible.
// fn must write to disjoint state per index; no implicit reduction happens.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// Deterministic sum: fixed 4096-element blocks are summed left to right and
// the per-block partials are combined serially. The result is a pure function
// of the data, identical for any thread count.
double block_sum(const double* data, std::size_t n);

// Same reduction over a virtual sequence given by a generator.
double block_sum(std::size_t n, const std::function<double(std::size_t)>& gen);

} // namespace mulog
