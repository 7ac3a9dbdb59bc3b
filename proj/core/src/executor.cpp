#include "rsmp/executor.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/parallel_for.h>
#include <oneapi/tbb/task_arena.h>

#include "rsmp/errors.hpp"

namespace rsmp {

struct Executor::Arena {
  explicit Arena(int workers) : arena(workers) {}
  tbb::task_arena arena;
};

Executor::Executor(int workers) : workers_(workers) {
  if (workers < 1) throw InvalidArgument("worker count must be >= 1");
  if (workers > 1) arena_ = std::make_shared<Arena>(workers);
}

Executor::~Executor() = default;
Executor::Executor(const Executor&) = default;
Executor& Executor::operator=(const Executor&) = default;
Executor::Executor(Executor&&) noexcept = default;
Executor& Executor::operator=(Executor&&) noexcept = default;

void Executor::for_blocks(
    std::size_t items,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn)
    const {
  const std::size_t blocks = block_count(items);
  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * kBlockSize;
    fn(b, begin, std::min(items, begin + kBlockSize));
  };
  if (!arena_ || blocks < 2) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }
  // TBB propagates the first exception, but only after cancelling the group;
  // capture it explicitly so library error types survive intact.
  std::exception_ptr failure;
  std::mutex failure_mutex;
  arena_->arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, blocks, 1),
                      [&](const tbb::blocked_range<std::size_t>& range) {
                        for (std::size_t b = range.begin(); b != range.end();
                             ++b) {
                          try {
                            run_block(b);
                          } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                          }
                        }
                      });
  });
  if (failure) std::rethrow_exception(failure);
}

void Executor::for_each(std::size_t items,
                        const std::function<void(std::size_t)>& fn) const {
  for_blocks(items, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace rsmp
