#pragma once

#include <exception>
#include <vector>

#include "lomo/corpus.hpp"

namespace lomo::detail {

// Reads `batch_size` instances at a time, runs `work(instance, index)` on
// them with `workers` OpenMP threads, then hands results to `sink` in input
// order on the calling thread. `index` counts instances from 0 in file order.
template <class Result, class Work, class Sink>
void run_batched(InstanceReader& reader, int workers, std::size_t batch_size, Work&& work,
                 Sink&& sink) {
  std::vector<Instance> batch;
  std::vector<Result> results;
  std::vector<std::exception_ptr> errors;
  std::size_t base = 0;
  for (;;) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto inst = reader.next();
      if (!inst) break;
      batch.push_back(std::move(*inst));
    }
    if (batch.empty()) break;
    const int n = static_cast<int>(batch.size());
    results.assign(batch.size(), Result{});
    errors.assign(batch.size(), nullptr);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
      try {
        results[i] = work(batch[i], base + static_cast<std::size_t>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (int i = 0; i < n; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
      sink(batch[i], results[i]);
    }
    base += batch.size();
  }
}

}  // namespace lomo::detail
