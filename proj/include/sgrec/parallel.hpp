// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sgrec {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(begin, end) over a contiguous partition of [0, n) with `threads`
/// workers. The partition depends only on (n, threads), never on scheduling,
/// so per-chunk results can be reduced in a fixed order.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2) {
    if (n > 0) fn(0, n);
    return;
  }
  const std::size_t nchunks = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  const std::size_t per = (n + nchunks - 1) / nchunks;
  std::vector<std::thread> workers;
  workers.reserve(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    const std::size_t begin = c * per;
    const std::size_t end = std::min(n, begin + per);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace sgrec
