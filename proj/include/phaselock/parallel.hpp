#pragma once

#include <cstddef>
#include <functional>

namespace phaselock {

/// Worker count: PHASELOCK_THREADS when set and positive, otherwise the
/// hardware concurrency (0 means auto).
std::size_t thread_count();

/// Runs task(i) for every i in [0, tasks) on up to thread_count() threads.
/// Tasks must write to disjoint outputs; the first exception is rethrown.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& task);

/// Compensated (Neumaier) running sum.
class NeumaierSum {
 public:
  void add(double v);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace phaselock
