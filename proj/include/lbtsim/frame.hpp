#pragma once

#include <cstdint>

#include "lbtsim/time.hpp"

namespace lbtsim {

using NodeId = int;  // >= 0 real device, -1 = jammer / none

constexpr std::uint8_t kBroadcastAddr = 255;
constexpr std::uint16_t kMaxPayload = 126;

enum class FrameKind : std::uint8_t { Poll, Reply, Unicast, Start, Stop, Jam };
enum class PreambleMode : std::uint8_t { Normal, Extended };

const char* to_string(FrameKind k);

// One over-the-air packet. payload_len drives airtime; product/quantity/run_id
// carry the application content that would live in those bytes.
struct Frame {
  FrameKind kind = FrameKind::Unicast;
  std::uint8_t src = 0;
  std::uint8_t dst = kBroadcastAddr;
  std::uint8_t seq = 0;
  std::uint16_t payload_len = 0;
  PreambleMode preamble = PreambleMode::Extended;
  std::uint16_t product = 0;
  std::uint16_t quantity = 0;
  std::uint16_t run_id = 0;
};

struct RadioParams {
  std::int64_t bit_rate = 38'400;       // bit/s
  Duration sniff_on_us = 200;           // LPL sniff window
  Duration sleep_us = 4'700;            // LPL sleep between sniffs
  int preamble_bytes = 4;
  int sync_bytes = 4;
  int header_bytes = 4;                 // len, src, dst, seq
  int crc_bytes = 2;
  Duration extended_preamble_us = 4'900;  // >= sleep_us + sniff_on_us catches every sniffer

  Duration lpl_period_us() const { return sleep_us + sniff_on_us; }
  void validate() const;
};

// Time on air. Normal preambles are part of the bit stream; an extended
// preamble replaces the preamble bytes by a fixed stretch of carrier.
Duration airtime_us(const Frame& f, const RadioParams& p);

// Offset from frame start at which the destination address is fully received;
// a mismatched receiver drops out of RX here.
Duration header_done_offset_us(const Frame& f, const RadioParams& p);

// Length of the preamble portion; only this part of a frame can catch a
// sniffing receiver.
Duration preamble_us(const Frame& f, const RadioParams& p);

}  // namespace lbtsim
