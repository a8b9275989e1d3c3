#include "mcao/rtc/frame_io.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "mcao/core/errors.hpp"
#include "mcao/core/matrix_file.hpp"

namespace mcao::rtc {

void write_frame(std::ostream& out, const WfsFrame& frame) {
  if (frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height)
    throw UsageError("frame pixel count does not match its dimensions");
  out.write("MCAF", 4);
  le::put_u16(out, kFrameFormatVersion);
  le::put_u16(out, frame.sensor_id);
  le::put_u16(out, frame.width);
  le::put_u16(out, frame.height);
  le::put_u32(out, 0);
  le::put_u64(out, frame.frame_id);
  le::put_u64(out, static_cast<std::uint64_t>(frame.timestamp));
  for (std::uint16_t p : frame.pixels) le::put_u16(out, p);
  if (!out) throw std::runtime_error("failed to write frame");
}

std::optional<WfsFrame> read_frame(std::istream& in) {
  std::array<unsigned char, kFrameHeaderBytes> h{};
  in.read(reinterpret_cast<char*>(h.data()), h.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got == 0) return std::nullopt;
  if (got != h.size()) throw ParseError("truncated frame header", 0);
  if (std::memcmp(h.data(), "MCAF", 4) != 0) throw ParseError("bad frame magic", 0);
  const std::uint16_t version = le::get_u16(h.data() + 4);
  if (version != kFrameFormatVersion) throw ParseError("unsupported frame version " + std::to_string(version), 0);
  WfsFrame f;
  f.sensor_id = le::get_u16(h.data() + 6);
  f.width = le::get_u16(h.data() + 8);
  f.height = le::get_u16(h.data() + 10);
  f.frame_id = le::get_u64(h.data() + 16);
  f.timestamp = static_cast<TimeNs>(le::get_u64(h.data() + 24));
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
  std::vector<unsigned char> raw(2 * n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw ParseError("truncated frame pixels", 0);
  f.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.pixels[i] = le::get_u16(raw.data() + 2 * i);
  return f;
}

}  // namespace mcao::rtc
