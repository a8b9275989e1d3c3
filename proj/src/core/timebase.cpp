#include "mcao/core/timebase.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "mcao/core/errors.hpp"

namespace mcao {
namespace {

bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > s.size()) return false;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + digits, out);
  if (ec != std::errc() || ptr != s.data() + pos + digits) return false;
  pos += digits;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) return false;
  ++pos;
  return true;
}

}  // namespace

TimeNs parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) throw ParseError("empty timestamp");

  if (text.find('T') == std::string_view::npos) {
    double seconds = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seconds);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(seconds))
      throw ParseError("bad timestamp '" + std::string(text) + "'");
    return seconds_to_ns(seconds);
  }

  std::tm tm{};
  std::size_t pos = 0;
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  bool ok = read_int(text, pos, 4, year) && expect(text, pos, '-') && read_int(text, pos, 2, month) &&
            expect(text, pos, '-') && read_int(text, pos, 2, day) && expect(text, pos, 'T') &&
            read_int(text, pos, 2, hour) && expect(text, pos, ':') && read_int(text, pos, 2, minute) &&
            expect(text, pos, ':') && read_int(text, pos, 2, second);
  if (!ok || month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
    throw ParseError("bad ISO-8601 timestamp '" + std::string(text) + "'");

  TimeNs frac = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    TimeNs scale = 100'000'000;
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      frac += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) throw ParseError("bad fractional seconds in '" + std::string(text) + "'");
  }

  long offset_s = 0;
  if (pos < text.size() && text[pos] == 'Z') {
    ++pos;
  } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    const int sign = text[pos] == '-' ? -1 : 1;
    ++pos;
    int oh = 0, om = 0;
    if (!read_int(text, pos, 2, oh) || !expect(text, pos, ':') || !read_int(text, pos, 2, om))
      throw ParseError("bad UTC offset in '" + std::string(text) + "'");
    offset_s = sign * (oh * 3600L + om * 60L);
  }
  if (pos != text.size()) throw ParseError("trailing characters in timestamp '" + std::string(text) + "'");

  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = second;
  const std::time_t t = timegm(&tm);
  return (static_cast<TimeNs>(t) - offset_s) * kNsPerSecond + frac;
}

std::string format_iso8601(TimeNs t) {
  TimeNs secs = t / kNsPerSecond;
  TimeNs ns = t % kNsPerSecond;
  if (ns < 0) {
    ns += kNsPerSecond;
    --secs;
  }
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%09lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(ns));
  return buf;
}

}  // namespace mcao
