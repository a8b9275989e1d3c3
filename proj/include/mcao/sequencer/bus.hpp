#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "mcao/core/timebase.hpp"

namespace mcao::seq {

using TelemetryValue = std::variant<double, std::vector<double>, std::string>;

struct TelemetryRecord {
  std::string source;
  std::string channel;
  TimeNs timestamp = 0;
  TelemetryValue value;
  std::uint64_t seq = 0;  // per channel, starting at 1
};

std::string format_value(const TelemetryValue& v);
// TLM <seq> <source> <channel> <timestamp> <value>
std::string format_tlm(const TelemetryRecord& r);

class Subscription {
 public:
  Subscription(std::string pattern, std::size_t capacity);

  const std::string& pattern() const { return pattern_; }
  bool matches(const std::string& channel) const;

  std::vector<TelemetryRecord> drain();
  std::size_t pending() const;
  std::uint64_t dropped() const;

 private:
  friend class TelemetryBus;
  void deliver(const TelemetryRecord& r);

  std::string pattern_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<TelemetryRecord> queue_;
  std::uint64_t dropped_ = 0;
};

// Fan-out with per-subscriber bounded queues. Publishing never blocks on a
// slow subscriber: its oldest records are discarded. No replay for late subscribers.
class TelemetryBus {
 public:
  std::shared_ptr<Subscription> subscribe(const std::string& pattern, std::size_t capacity = 1024);
  void unsubscribe(const std::shared_ptr<Subscription>& s);

  std::uint64_t publish(const std::string& source, const std::string& channel, TimeNs t, TelemetryValue value);

 private:
  std::mutex mu_;
  std::map<std::string, std::uint64_t> seq_;
  std::vector<std::weak_ptr<Subscription>> subs_;
};

}  // namespace mcao::seq
