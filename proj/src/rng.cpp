#include "treesv/rng.hpp"

#include <algorithm>
#include <vector>

namespace treesv {

std::vector<int> sample_without_replacement(Rng& rng, int n, int k) {
  if (k > n) k = n;
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  // Partial Fisher-Yates: after i swaps the prefix holds an unbiased sample.
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace treesv
