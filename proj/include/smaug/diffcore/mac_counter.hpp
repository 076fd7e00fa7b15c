#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace smaug::diff {

/// Per-run accumulator of matmul multiply-accumulates, keyed by module tag.
class MacCounter {
 public:
  void add(const std::string& tag, std::uint64_t macs) { totals_[tag] += macs; }
  std::uint64_t total(const std::string& tag) const;
  std::uint64_t grand_total() const;
  const std::map<std::string, std::uint64_t>& totals() const noexcept { return totals_; }
  void clear() { totals_.clear(); }

 private:
  std::map<std::string, std::uint64_t> totals_;
};

/// Activates `counter` for forward matmuls on this thread for its lifetime.
class CountingSession {
 public:
  explicit CountingSession(MacCounter& counter);
  ~CountingSession();
  CountingSession(const CountingSession&) = delete;
  CountingSession& operator=(const CountingSession&) = delete;

 private:
  MacCounter* previous_;
};

/// Sets the module tag under which MACs are attributed; nests.
class MacScope {
 public:
  explicit MacScope(std::string tag);
  ~MacScope();
  MacScope(const MacScope&) = delete;
  MacScope& operator=(const MacScope&) = delete;

 private:
  std::string previous_;
};

/// Called by matmul; no-op unless a CountingSession is active.
void record_macs(std::uint64_t macs);

}  // namespace smaug::diff
