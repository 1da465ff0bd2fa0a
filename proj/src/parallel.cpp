#include <acl/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace acl
{

namespace
{

std::atomic<int>& threads_slot()
{
  static std::atomic<int> n = [] {
    char const* env = std::getenv("ACL_THREADS");
    int v = env ? std::atoi(env) : 1;
    return v > 0 ? v : 1;
  }();
  return n;
}

}

int thread_count() { return threads_slot().load(); }

void set_thread_count(int n) { threads_slot().store(std::max(1, n)); }

void parallel_for(int64_t n, std::function<void(int64_t, int64_t)> const& fn)
{
  int T = int(std::min<int64_t>(thread_count(), std::max<int64_t>(n, 1)));
  if(T <= 1)
  {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  int64_t chunk = (n + T - 1) / T;
  for(int k = 0; k < T; ++k)
  {
    int64_t b = k * chunk, e = std::min(n, b + chunk);
    if(b < e)
      pool.emplace_back(fn, b, e);
  }
  for(auto& th : pool)
    th.join();
}

uint64_t derive_seed(uint64_t seed, uint64_t index)
{
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}
