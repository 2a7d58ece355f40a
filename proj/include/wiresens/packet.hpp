#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wiresens/types.hpp"

namespace wiresens {

// Wire layout, little-endian:
//   magic u16 | version u8 | deviceId u8 | packetId u32 | timestampUs u64 |
//   rows u8 | cols u8 | flags u8 | payload rows*cols x u16 | crc32 u32
inline constexpr std::uint16_t kPacketMagic = 0x5752;
inline constexpr std::uint8_t kPacketVersion = 1;
inline constexpr std::size_t kPacketHeaderSize = 19;
inline constexpr std::size_t kPacketTrailerSize = 4;
inline constexpr std::uint8_t kFlagReconstructed = 0x01;

constexpr std::size_t encoded_size(int rows, int cols) {
    return kPacketHeaderSize + 2 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) +
           kPacketTrailerSize;
}

using Bytes = std::vector<std::uint8_t>;

/// Throws CodecError(out_of_range) if any value exceeds 2^adcBits - 1, and
/// CodecError(bad_geometry) if values.size() != rows*cols.
Bytes encode_packet(const Frame& frame, int adcBits = 12);
void encode_packet_into(const Frame& frame, Bytes& out, int adcBits = 12);

/// Decodes exactly one packet occupying the whole buffer.
Frame decode_packet(std::span<const std::uint8_t> bytes);

/// Size of the packet starting at `bytes` as announced by its header, or 0
/// if fewer than kPacketHeaderSize bytes are available. Does not validate.
std::size_t peek_packet_size(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace wiresens
