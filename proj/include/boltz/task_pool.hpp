#pragma once

#include <cstddef>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace boltz {

/// Fixed-size pool of cores for data-parallel loops. Every index of a
/// parallel_for is executed by exactly one task, so any loop whose body only
/// writes slot `i` gives the same bits for every pool size.
class TaskPool {
 public:
  explicit TaskPool(int threads = 1)
      : threads_(threads < 1 ? 1 : threads),
        arena_(std::make_unique<tbb::task_arena>(threads_)) {}

  int concurrency() const { return threads_; }

  template <class Body>
  void parallel_for(std::size_t begin, std::size_t end, Body&& body) const {
    if (end <= begin) return;
    if (threads_ == 1) {
      for (std::size_t i = begin; i < end; ++i) body(i);
      return;
    }
    arena_->execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(begin, end),
                        [&](const tbb::blocked_range<std::size_t>& r) {
                          for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
                        });
    });
  }

 private:
  int threads_;
  std::unique_ptr<tbb::task_arena> arena_;
};

}  // namespace boltz
