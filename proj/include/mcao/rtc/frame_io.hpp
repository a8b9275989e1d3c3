#pragma once

#include <iosfwd>
#include <optional>

#include "mcao/rtc/types.hpp"

namespace mcao::rtc {

inline constexpr std::uint16_t kFrameFormatVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 32;

// 32-byte little-endian header ("MCAF", version, sensor_id, width, height,
// reserved u32, frame_id u64, timestamp_ns u64) followed by width*height u16 pixels.
void write_frame(std::ostream& out, const WfsFrame& frame);

// Reads the next frame of a stream; nullopt at a clean end of stream.
// Throws ParseError on a bad magic, version or truncated record.
std::optional<WfsFrame> read_frame(std::istream& in);

}  // namespace mcao::rtc
