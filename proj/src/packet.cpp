#include "wiresens/packet.hpp"

#include <zlib.h>

#include <string>

#include "wiresens/error.hpp"

namespace wiresens {

namespace {

template <class T>
void put_le(Bytes& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class T>
T get_le(std::span<const std::uint8_t> in, std::size_t at) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in[at + i]) << (8 * i));
    return v;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong c = ::crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(::crc32(c, bytes.data(), static_cast<uInt>(bytes.size())));
}

void encode_packet_into(const Frame& f, Bytes& out, int adcBits) {
    if (f.rows == 0 || f.cols == 0 || f.values.size() != static_cast<std::size_t>(f.rows) * f.cols)
        throw CodecError(CodecErrc::bad_geometry, "frame values do not match rows*cols");
    const auto maxCount = static_cast<std::uint32_t>((1u << adcBits) - 1);
    for (auto v : f.values) {
        if (v > maxCount)
            throw CodecError(CodecErrc::out_of_range,
                             "value " + std::to_string(v) + " exceeds ADC range " + std::to_string(maxCount));
    }
    const std::size_t start = out.size();
    put_le<std::uint16_t>(out, kPacketMagic);
    put_le<std::uint8_t>(out, kPacketVersion);
    put_le<std::uint8_t>(out, f.deviceId);
    put_le<std::uint32_t>(out, f.packetId);
    put_le<std::uint64_t>(out, f.timestampUs);
    put_le<std::uint8_t>(out, f.rows);
    put_le<std::uint8_t>(out, f.cols);
    put_le<std::uint8_t>(out, f.reconstructed ? kFlagReconstructed : 0);
    for (auto v : f.values) put_le<std::uint16_t>(out, v);
    put_le<std::uint32_t>(out, crc32(std::span(out).subspan(start)));
}

Bytes encode_packet(const Frame& frame, int adcBits) {
    Bytes out;
    encode_packet_into(frame, out, adcBits);
    return out;
}

std::size_t peek_packet_size(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kPacketHeaderSize) return 0;
    return encoded_size(bytes[16], bytes[17]);
}

Frame decode_packet(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kPacketHeaderSize + kPacketTrailerSize)
        throw CodecError(CodecErrc::truncated,
                         "truncated packet: " + std::to_string(bytes.size()) + " bytes");
    if (get_le<std::uint16_t>(bytes, 0) != kPacketMagic) throw CodecError(CodecErrc::bad_magic, "bad packet magic");
    if (bytes[2] != kPacketVersion)
        throw CodecError(CodecErrc::bad_version, "unsupported packet version " + std::to_string(bytes[2]));
    Frame f;
    f.rows = bytes[16];
    f.cols = bytes[17];
    const std::size_t expected = encoded_size(f.rows, f.cols);
    if (bytes.size() < expected)
        throw CodecError(CodecErrc::truncated, "truncated packet: " + std::to_string(bytes.size()) + " of " +
                                                   std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        throw CodecError(CodecErrc::bad_geometry, "trailing bytes after packet");
    const std::uint32_t stored = get_le<std::uint32_t>(bytes, expected - kPacketTrailerSize);
    if (stored != crc32(bytes.first(expected - kPacketTrailerSize)))
        throw CodecError(CodecErrc::crc_mismatch, "packet CRC mismatch");
    if (f.rows == 0 || f.cols == 0) throw CodecError(CodecErrc::bad_geometry, "zero-sized packet geometry");

    f.deviceId = bytes[3];
    f.packetId = get_le<std::uint32_t>(bytes, 4);
    f.timestampUs = get_le<std::uint64_t>(bytes, 8);
    f.reconstructed = (bytes[18] & kFlagReconstructed) != 0;
    const std::size_t n = static_cast<std::size_t>(f.rows) * f.cols;
    f.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.values[i] = get_le<std::uint16_t>(bytes, kPacketHeaderSize + 2 * i);
    return f;
}

}  // namespace wiresens
