#include "lbtsim/frame.hpp"

#include <stdexcept>

namespace lbtsim {

const char* to_string(FrameKind k) {
  switch (k) {
    case FrameKind::Poll: return "poll";
    case FrameKind::Reply: return "reply";
    case FrameKind::Unicast: return "unicast";
    case FrameKind::Start: return "start";
    case FrameKind::Stop: return "stop";
    case FrameKind::Jam: return "jam";
  }
  return "?";
}

void RadioParams::validate() const {
  if (bit_rate <= 0) throw std::invalid_argument("radio: bit_rate must be positive");
  if (sniff_on_us <= 0 || sleep_us <= 0)
    throw std::invalid_argument("radio: sniff_on_us and sleep_us must be positive");
  if (preamble_bytes <= 0 || sync_bytes <= 0 || header_bytes <= 0 || crc_bytes <= 0)
    throw std::invalid_argument("radio: frame overhead bytes must be positive");
  if (extended_preamble_us < sleep_us)
    throw std::invalid_argument("radio: extended_preamble_us must be >= sleep_us");
}

namespace {
inline Duration bits_to_us(std::int64_t bits, std::int64_t bit_rate) {
  return (bits * 1'000'000 + bit_rate - 1) / bit_rate;  // ceil
}
}  // namespace

Duration airtime_us(const Frame& f, const RadioParams& p) {
  if (f.payload_len > kMaxPayload)
    throw std::invalid_argument("frame: payload_len exceeds 126 bytes");
  const std::int64_t body_bytes =
      p.sync_bytes + p.header_bytes + f.payload_len + p.crc_bytes;
  if (f.preamble == PreambleMode::Extended)
    return p.extended_preamble_us + bits_to_us(8 * body_bytes, p.bit_rate);
  return bits_to_us(8 * (p.preamble_bytes + body_bytes), p.bit_rate);
}

Duration header_done_offset_us(const Frame& f, const RadioParams& p) {
  const std::int64_t bytes = p.sync_bytes + p.header_bytes;
  if (f.preamble == PreambleMode::Extended)
    return p.extended_preamble_us + bits_to_us(8 * bytes, p.bit_rate);
  return bits_to_us(8 * (p.preamble_bytes + bytes), p.bit_rate);
}

Duration preamble_us(const Frame& f, const RadioParams& p) {
  if (f.preamble == PreambleMode::Extended) return p.extended_preamble_us;
  return bits_to_us(8 * p.preamble_bytes, p.bit_rate);
}

}  // namespace lbtsim
