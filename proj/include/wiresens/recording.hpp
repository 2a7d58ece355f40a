#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "wiresens/packet.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

// WRS1 layout: "WRS1" | version u8 | deviceId u8 | rows u8 | cols u8 |
// adcBits u8 | reserved u8, followed by WirePackets back to back.
inline constexpr char kRecordingMagic[4] = {'W', 'R', 'S', '1'};
inline constexpr std::uint8_t kRecordingVersion = 1;
inline constexpr std::size_t kRecordingHeaderSize = 10;

struct RecordingHeader {
    std::uint8_t deviceId = 0;
    std::uint8_t rows = 0;
    std::uint8_t cols = 0;
    std::uint8_t adcBits = 12;

    friend bool operator==(const RecordingHeader&, const RecordingHeader&) = default;
};

struct Recording {
    RecordingHeader header;
    std::vector<Frame> frames;
};

/// Streaming writer; frames are appended as they arrive.
class RecordingWriter {
public:
    RecordingWriter(const std::string& path, const RecordingHeader& header);

    /// Throws RecordingError on geometry mismatch, IoError on write failure.
    void append(const Frame& frame);
    void flush();
    std::size_t frames_written() const { return count_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    RecordingHeader header_;
    std::ofstream out_;
    Bytes scratch_;
    std::size_t count_ = 0;
};

Bytes serialize_recording(const RecordingHeader& header, std::span<const Frame> frames);
Recording parse_recording(std::span<const std::uint8_t> bytes);

void write_recording(const std::string& path, const RecordingHeader& header, std::span<const Frame> frames);
Recording read_recording(const std::string& path);

/// One row per frame: timestampUs,packetId,reconstructed,v0..vN-1
std::string export_csv(const Recording& rec);
std::string export_json(const Recording& rec);

}  // namespace wiresens
