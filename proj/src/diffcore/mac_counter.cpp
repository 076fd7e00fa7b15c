#include "smaug/diffcore/mac_counter.hpp"

namespace smaug::diff {

namespace {
thread_local MacCounter* g_active = nullptr;
thread_local std::string g_tag = "untagged";
}  // namespace

std::uint64_t MacCounter::total(const std::string& tag) const {
  auto it = totals_.find(tag);
  return it == totals_.end() ? 0 : it->second;
}

std::uint64_t MacCounter::grand_total() const {
  std::uint64_t s = 0;
  for (const auto& [_, v] : totals_) s += v;
  return s;
}

CountingSession::CountingSession(MacCounter& counter) : previous_(g_active) { g_active = &counter; }
CountingSession::~CountingSession() { g_active = previous_; }

MacScope::MacScope(std::string tag) : previous_(std::move(g_tag)) { g_tag = std::move(tag); }
MacScope::~MacScope() { g_tag = std::move(previous_); }

void record_macs(std::uint64_t macs) {
  if (g_active) g_active->add(g_tag, macs);
}

}  // namespace smaug::diff
