#include "mcao/sequencer/bus.hpp"

#include <fnmatch.h>

#include <algorithm>

#include <fmt/format.h>

namespace mcao::seq {

std::string format_value(const TelemetryValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return fmt::format("{:.9g}", *d);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  const auto& vec = std::get<std::vector<double>>(v);
  std::string out = "[";
  for (std::size_t i = 0; i < vec.size(); ++i) out += fmt::format("{}{:.9g}", i ? "," : "", vec[i]);
  return out + "]";
}

std::string format_tlm(const TelemetryRecord& r) {
  return fmt::format("TLM {} {} {} {} {}", r.seq, r.source, r.channel, format_iso8601(r.timestamp),
                     format_value(r.value));
}

Subscription::Subscription(std::string pattern, std::size_t capacity)
    : pattern_(std::move(pattern)), capacity_(std::max<std::size_t>(1, capacity)) {}

bool Subscription::matches(const std::string& channel) const {
  return fnmatch(pattern_.c_str(), channel.c_str(), 0) == 0;
}

void Subscription::deliver(const TelemetryRecord& r) {
  std::lock_guard lk(mu_);
  if (queue_.size() == capacity_) {
    queue_.pop_front();
    ++dropped_;
  }
  queue_.push_back(r);
}

std::vector<TelemetryRecord> Subscription::drain() {
  std::lock_guard lk(mu_);
  std::vector<TelemetryRecord> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t Subscription::pending() const {
  std::lock_guard lk(mu_);
  return queue_.size();
}

std::uint64_t Subscription::dropped() const {
  std::lock_guard lk(mu_);
  return dropped_;
}

std::shared_ptr<Subscription> TelemetryBus::subscribe(const std::string& pattern, std::size_t capacity) {
  auto s = std::make_shared<Subscription>(pattern, capacity);
  std::lock_guard lk(mu_);
  subs_.push_back(s);
  return s;
}

void TelemetryBus::unsubscribe(const std::shared_ptr<Subscription>& s) {
  std::lock_guard lk(mu_);
  std::erase_if(subs_, [&](const auto& w) {
    auto p = w.lock();
    return !p || p == s;
  });
}

std::uint64_t TelemetryBus::publish(const std::string& source, const std::string& channel, TimeNs t,
                                    TelemetryValue value) {
  std::lock_guard lk(mu_);
  TelemetryRecord r{source, channel, t, std::move(value), ++seq_[channel]};
  bool expired = false;
  for (const auto& w : subs_) {
    if (auto s = w.lock()) {
      if (s->matches(channel)) s->deliver(r);
    } else {
      expired = true;
    }
  }
  if (expired) std::erase_if(subs_, [](const auto& w) { return w.expired(); });
  return r.seq;
}

}  // namespace mcao::seq
