#include "wiresens/recording.hpp"

#include <cstring>
#include <sstream>

#include "json.hpp"
#include "wiresens/error.hpp"

namespace wiresens {

namespace {

void put_header(Bytes& out, const RecordingHeader& h) {
    out.insert(out.end(), std::begin(kRecordingMagic), std::end(kRecordingMagic));
    out.push_back(kRecordingVersion);
    out.push_back(h.deviceId);
    out.push_back(h.rows);
    out.push_back(h.cols);
    out.push_back(h.adcBits);
    out.push_back(0);
}

void check_geometry(const RecordingHeader& h, const Frame& f, std::size_t index) {
    if (f.rows != h.rows || f.cols != h.cols)
        throw RecordingError("frame " + std::to_string(index) + " geometry " + std::to_string(f.rows) + "x" +
                             std::to_string(f.cols) + " does not match recording geometry " +
                             std::to_string(h.rows) + "x" + std::to_string(h.cols));
}

}  // namespace

RecordingWriter::RecordingWriter(const std::string& path, const RecordingHeader& header)
    : path_(path), header_(header), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    put_header(scratch_, header_);
    out_.write(reinterpret_cast<const char*>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
    if (!out_) throw IoError("write failed: " + path);
}

void RecordingWriter::append(const Frame& frame) {
    check_geometry(header_, frame, count_);
    scratch_.clear();
    encode_packet_into(frame, scratch_, header_.adcBits);
    out_.write(reinterpret_cast<const char*>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
    if (!out_) throw IoError("write failed: " + path_);
    ++count_;
}

void RecordingWriter::flush() {
    out_.flush();
    if (!out_) throw IoError("flush failed: " + path_);
}

Bytes serialize_recording(const RecordingHeader& header, std::span<const Frame> frames) {
    Bytes out;
    out.reserve(kRecordingHeaderSize + frames.size() * encoded_size(header.rows, header.cols));
    put_header(out, header);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        check_geometry(header, frames[i], i);
        encode_packet_into(frames[i], out, header.adcBits);
    }
    return out;
}

Recording parse_recording(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kRecordingHeaderSize || std::memcmp(bytes.data(), kRecordingMagic, 4) != 0)
        throw RecordingError("not a WRS1 recording");
    if (bytes[4] != kRecordingVersion)
        throw RecordingError("unsupported recording version " + std::to_string(bytes[4]));
    Recording rec;
    rec.header = {bytes[5], bytes[6], bytes[7], bytes[8]};
    std::size_t at = kRecordingHeaderSize;
    while (at < bytes.size()) {
        auto rest = bytes.subspan(at);
        std::size_t n = peek_packet_size(rest);
        if (n == 0 || n > rest.size())
            throw RecordingError("truncated frame at byte offset " + std::to_string(at));
        Frame f = decode_packet(rest.first(n));
        check_geometry(rec.header, f, rec.frames.size());
        rec.frames.push_back(std::move(f));
        at += n;
    }
    return rec;
}

void write_recording(const std::string& path, const RecordingHeader& header, std::span<const Frame> frames) {
    Bytes bytes = serialize_recording(header, frames);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

Recording read_recording(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_recording(bytes);
}

std::string export_csv(const Recording& rec) {
    std::ostringstream os;
    os << "timestampUs,packetId,reconstructed";
    const std::size_t n = static_cast<std::size_t>(rec.header.rows) * rec.header.cols;
    for (std::size_t i = 0; i < n; ++i) os << ",v" << i;
    os << '\n';
    for (const auto& f : rec.frames) {
        os << f.timestampUs << ',' << f.packetId << ',' << (f.reconstructed ? 1 : 0);
        for (auto v : f.values) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

std::string export_json(const Recording& rec) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : rec.frames) {
        frames.push_back({{"timestampUs", f.timestampUs},
                          {"packetId", f.packetId},
                          {"reconstructed", f.reconstructed},
                          {"values", f.values}});
    }
    nlohmann::json j = {{"deviceId", rec.header.deviceId},
                        {"rows", rec.header.rows},
                        {"cols", rec.header.cols},
                        {"adcBits", rec.header.adcBits},
                        {"frames", std::move(frames)}};
    return j.dump();
}

}  // namespace wiresens
