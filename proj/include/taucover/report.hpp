#pragma once

#include <string>
#include <vector>

namespace taucover {

struct CheckRecord {
  std::string name;
  bool pass = true;
  double value = 0;     // residual or number of failing cells
  std::string context;  // offending indices, tolerances, truncation degree
  bool informational = false;  // reported with status "residual"; never fails
};

struct Report {
  std::vector<CheckRecord> records;

  void add(std::string name, bool pass, double value, std::string context = {}) {
    records.push_back({std::move(name), pass, value, std::move(context)});
  }
  /// A measured value with no pass/fail verdict.
  void note(std::string name, double value, std::string context = {}) {
    records.push_back({std::move(name), true, value, std::move(context), true});
  }
  void append(const Report& o) { records.insert(records.end(), o.records.begin(), o.records.end()); }
  bool ok() const {
    for (const auto& r : records)
      if (!r.pass) return false;
    return true;
  }
  const CheckRecord* find(const std::string& name) const {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  }
};

/// "(a,p;b,q)" with 1-based a and b.
std::string cell_label(int a, int p, int b, int q);

/// One record for a family of cells. Empty strings mark passing cells; the
/// first few failing ones are listed in the context.
void add_cells(Report& r, const std::string& name, const std::vector<std::string>& cells, const std::string& ctx);

/// Worker count: TAUCOVER_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Runs fn(i) for i in [0, count) on up to worker_count() threads. Callers
/// write results into pre-sized slots, so output order never depends on
/// scheduling.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn);

}  // namespace taucover

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace taucover {

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        if (failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace taucover
