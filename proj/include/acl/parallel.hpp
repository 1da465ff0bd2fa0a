#pragma once

#include <cstdint>
#include <functional>

namespace acl
{

// Worker count used by batch loops. Initialised from ACL_THREADS, else 1.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n) split into contiguous chunks, one per worker.
void parallel_for(int64_t n, std::function<void(int64_t begin, int64_t end)> const& fn);

// Deterministic per-sample seed derivation (splitmix64).
uint64_t derive_seed(uint64_t seed, uint64_t index);

}
