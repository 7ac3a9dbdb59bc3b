#pragma once

#include <cstddef>
#include <functional>
#include <memory>

namespace rsmp {

/// Runs path-parallel work in fixed-size blocks. Block boundaries depend only
/// on the problem size, never on the worker count, so any reduction that
/// combines per-block partials in block order is bit-identical for every
/// worker count.
class Executor {
 public:
  static constexpr std::size_t kBlockSize = 256;

  explicit Executor(int workers = 1);
  ~Executor();
  Executor(const Executor&);
  Executor& operator=(const Executor&);
  Executor(Executor&&) noexcept;
  Executor& operator=(Executor&&) noexcept;

  int workers() const { return workers_; }

  static std::size_t block_count(std::size_t items) {
    return (items + kBlockSize - 1) / kBlockSize;
  }

  /// Calls fn(block, begin, end) for every block of [0, items).
  void for_blocks(
      std::size_t items,
      const std::function<void(std::size_t, std::size_t, std::size_t)>& fn)
      const;

  /// Calls fn(i) for every i in [0, items).
  void for_each(std::size_t items,
                const std::function<void(std::size_t)>& fn) const;

 private:
  struct Arena;
  int workers_;
  std::shared_ptr<Arena> arena_;
};

}  // namespace rsmp
