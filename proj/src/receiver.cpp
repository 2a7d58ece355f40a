#include "wiresens/receiver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"
#include "wiresens/packet.hpp"

namespace wiresens {

double SessionMetrics::throughput_fps() const {
    if (framesReceived < 2 || lastArrivalUs <= firstArrivalUs) return 0.0;
    return static_cast<double>(framesReceived - 1) * 1e6 / static_cast<double>(lastArrivalUs - firstArrivalUs);
}

double SessionMetrics::loss_pct() const {
    const auto total = framesReceived + framesReconstructed;
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(framesReconstructed) / static_cast<double>(total);
}

json to_json(const SessionMetrics& m) {
    json j = {{"framesReceived", m.framesReceived},
              {"framesReconstructed", m.framesReconstructed},
              {"framesLost", m.framesLost},
              {"throughputFps", m.throughput_fps()},
              {"lossPct", m.loss_pct()}};
    j["nrmseVsTruth"] = m.nrmseVsTruth ? json(*m.nrmseVsTruth) : json(nullptr);
    return j;
}

DeviceSession::DeviceSession(std::uint8_t deviceId, int p, int adcBits)
    : deviceId_(deviceId), p_(p), adcBits_(adcBits) {
    if (p < 1) throw DomainError("p must be at least 1");
}

void DeviceSession::advance(const Frame& f) {
    prev_ = std::move(last_);
    last_ = f;
}

std::vector<Frame> DeviceSession::ingest(const Frame& packet, std::uint64_t tArrivalUs) {
    if (packet.deviceId != deviceId_)
        throw DomainError("packet for device " + std::to_string(packet.deviceId) + " routed to session " +
                          std::to_string(deviceId_));
    if (last_ && !packet.same_geometry(*last_))
        throw GeometryError("device " + std::to_string(deviceId_) + " changed geometry mid-session");

    std::vector<Frame> out;
    if (!initial_) {
        initial_ = packet.packetId;
        metrics_.firstArrivalUs = tArrivalUs;
    } else if (packet.packetId < expected_) {
        ++metrics_.framesLost;
        return out;
    } else {
        const std::uint32_t gap = packet.packetId - expected_;
        const std::uint64_t t0 = last_->timestampUs;
        out.reserve(gap + 1);
        for (std::uint32_t k = 1; k <= gap; ++k) {
            Frame f = predict_frame(prev_ ? *prev_ : *last_, *last_, p_, adcBits_);
            f.packetId = expected_ + k - 1;
            f.timestampUs = tArrivalUs > t0 ? t0 + (tArrivalUs - t0) * k / (gap + 1) : tArrivalUs;
            f.reconstructed = true;
            advance(f);
            out.push_back(std::move(f));
        }
        metrics_.framesReconstructed += gap;
    }
    Frame f = packet;
    f.timestampUs = tArrivalUs;
    advance(f);
    out.push_back(std::move(f));
    expected_ = packet.packetId + 1;
    ++metrics_.framesReceived;
    metrics_.lastArrivalUs = tArrivalUs;
    return out;
}

Receiver::Receiver(std::vector<DeviceConfig> devices, int defaultP)
    : devices_(std::move(devices)), defaultP_(defaultP) {}

DeviceSession* Receiver::session(int deviceId) {
    auto it = sessions_.find(deviceId);
    return it == sessions_.end() ? nullptr : &it->second;
}

DeviceSession& Receiver::session_for(const Frame& packet) {
    auto it = sessions_.find(packet.deviceId);
    if (it != sessions_.end()) return it->second;
    int p = defaultP_;
    int bits = 12;
    for (const auto& d : devices_) {
        if (d.deviceId == packet.deviceId) {
            p = d.p;
            bits = d.adcBits;
        }
    }
    return sessions_.emplace(packet.deviceId, DeviceSession(packet.deviceId, p, bits)).first->second;
}

std::vector<Frame> Receiver::ingest(const Frame& packet, std::uint64_t tArrivalUs) {
    DeviceSession& s = session_for(packet);
    std::vector<Frame> frames = s.ingest(packet, tArrivalUs);
    if (recordDir_ && !frames.empty()) {
        auto& w = writers_[packet.deviceId];
        if (!w) {
            RecordingHeader h{packet.deviceId, packet.rows, packet.cols, static_cast<std::uint8_t>(s.adc_bits())};
            w = std::make_unique<RecordingWriter>(recording_path(*recordDir_, packet.deviceId), h);
        }
        for (const auto& f : frames) {
            try {
                w->append(f);
            } catch (const Error& e) {
                throw IoError("device " + std::to_string(packet.deviceId) + ": " + e.what());
            }
        }
    }
    return frames;
}

std::vector<Frame> Receiver::ingest_bytes(std::span<const std::uint8_t> bytes, std::uint64_t tArrivalUs) {
    try {
        return ingest(decode_packet(bytes), tArrivalUs);
    } catch (const CodecError&) {
        ++rejected_;
        throw;
    }
}

void Receiver::record_to(const std::string& dir) {
    std::filesystem::create_directories(dir);
    recordDir_ = dir;
}

void Receiver::flush() {
    for (auto& [id, w] : writers_) w->flush();
}

json Receiver::metrics_json() const {
    json devices = json::array();
    for (const auto& [id, s] : sessions_) {
        json m = to_json(s.metrics());
        m["deviceId"] = id;
        m["expectedPacketId"] = s.expected_packet_id();
        devices.push_back(std::move(m));
    }
    return {{"schemaVersion", 1}, {"rejectedPackets", rejected_}, {"devices", std::move(devices)}};
}

std::string recording_path(const std::string& dir, int deviceId) {
    return (std::filesystem::path(dir) / ("device_" + std::to_string(deviceId) + ".wrs")).string();
}

std::vector<std::string> record(const std::map<int, std::vector<Frame>>& framesByDevice, const std::string& dir,
                                int adcBits) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (const auto& [id, frames] : framesByDevice) {
        RecordingHeader h{static_cast<std::uint8_t>(id), 0, 0, static_cast<std::uint8_t>(adcBits)};
        if (!frames.empty()) {
            h.rows = frames.front().rows;
            h.cols = frames.front().cols;
        }
        const std::string path = recording_path(dir, id);
        try {
            write_recording(path, h, frames);
        } catch (const Error& e) {
            throw IoError("device " + std::to_string(id) + ": " + e.what());
        }
        paths.push_back(path);
    }
    return paths;
}

double nrmse(std::span<const Frame> predicted, std::span<const Frame> truth, int adcBits) {
    if (predicted.size() != truth.size())
        throw DomainError("nrmse: " + std::to_string(predicted.size()) + " predicted vs " +
                          std::to_string(truth.size()) + " truth frames");
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& a = predicted[i].values;
        const auto& b = truth[i].values;
        if (a.size() != b.size()) throw GeometryError("nrmse: frame geometry mismatch");
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double e = static_cast<double>(a[k]) - static_cast<double>(b[k]);
            sq += e * e;
        }
        n += a.size();
    }
    if (n == 0) return 0.0;
    return std::sqrt(sq / static_cast<double>(n)) / static_cast<double>((1 << adcBits) - 1);
}

std::vector<Frame> select_frames(const Recording& rec, std::optional<std::uint64_t> startUs,
                                 std::optional<std::uint64_t> endUs) {
    std::vector<Frame> out;
    for (const auto& f : rec.frames) {
        if (startUs && f.timestampUs < *startUs) continue;
        if (endUs && f.timestampUs >= *endUs) continue;
        out.push_back(f);
    }
    return out;
}

std::size_t replay(const Recording& rec, const ReplayOptions& opts, const std::function<void(const Frame&)>& sink,
                   const std::atomic<bool>* cancel) {
    if (!(opts.speed > 0)) throw DomainError("replay speed must be positive");
    const std::vector<Frame> frames = select_frames(rec, opts.startUs, opts.endUs);
    if (frames.empty()) return 0;
    const bool paced = std::isfinite(opts.speed);
    const auto wallStart = std::chrono::steady_clock::now();
    const std::uint64_t t0 = frames.front().timestampUs;
    std::size_t emitted = 0;
    for (const auto& f : frames) {
        if (cancel && cancel->load()) break;
        if (paced) {
            const double offsetUs = static_cast<double>(f.timestampUs > t0 ? f.timestampUs - t0 : 0) / opts.speed;
            std::this_thread::sleep_until(wallStart + std::chrono::microseconds(static_cast<std::int64_t>(offsetUs)));
        }
        sink(f);
        ++emitted;
    }
    return emitted;
}

}  // namespace wiresens
