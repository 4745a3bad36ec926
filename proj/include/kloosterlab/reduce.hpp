#pragma once

// Compensated accumulation and the deterministic block reduction used by
// every sweep. Results depend on the block size, never on the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kloosterlab {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
  void add(std::complex<double> z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  void add(double x) { re_.add(x); }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
  CompensatedSum re_;
  CompensatedSum im_;
};

inline constexpr std::size_t kReductionBlock = 4096;

/// Runs body(block_index) for block_index in [0, blocks) on `threads` workers.
/// Blocks are claimed dynamically; callers must write results per block.
inline void parallel_for_blocks(std::size_t blocks, unsigned threads,
                                const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        body(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  pool.reserve(n);
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Sum term(i) for i in [first, last). The range is cut into blocks aligned
/// to multiples of kReductionBlock; each block is summed in ascending order and
/// block sums are combined in block order, so the result is identical for
/// every thread count.
template <class Term>
std::complex<double> deterministic_sum(std::size_t first, std::size_t last, unsigned threads,
                                       Term&& term) {
  if (last <= first) return {0.0, 0.0};
  const std::size_t first_block = first / kReductionBlock;
  const std::size_t last_block = (last - 1) / kReductionBlock;
  const std::size_t blocks = last_block - first_block + 1;
  std::vector<std::complex<double>> partial(blocks);
  parallel_for_blocks(blocks, threads, [&](std::size_t b) {
    const std::size_t lo = std::max(first, (first_block + b) * kReductionBlock);
    const std::size_t hi = std::min(last, (first_block + b + 1) * kReductionBlock);
    CompensatedComplexSum acc;
    for (std::size_t i = lo; i < hi; ++i) acc.add(std::complex<double>(term(i)));
    partial[b] = acc.value();
  });
  CompensatedComplexSum total;
  for (const auto& p : partial) total.add(p);
  return total.value();
}

} // namespace kloosterlab
