#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wiresens/config.hpp"
#include "wiresens/recording.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

struct SessionMetrics {
    std::uint64_t framesReceived = 0;
    std::uint64_t framesReconstructed = 0;
    std::uint64_t framesLost = 0;  // late or duplicate packets, dropped
    std::uint64_t firstArrivalUs = 0;
    std::uint64_t lastArrivalUs = 0;
    std::optional<double> nrmseVsTruth;

    /// Received packets per second between first and last arrival.
    double throughput_fps() const;
    /// Share of emitted frames that had to be reconstructed, in percent.
    double loss_pct() const;
};

json to_json(const SessionMetrics& m);

/// Receiver-side state for one sender. Strictly serialized: one ingest at a time.
class DeviceSession {
public:
    DeviceSession(std::uint8_t deviceId, int p, int adcBits = 12);

    /// Emits reconstructed frames for any packetId gap, then the received
    /// frame. Late and duplicate packets are dropped and counted. Emitted
    /// frames carry arrival timestamps; reconstructed ones are interpolated
    /// linearly between the previous emission and this arrival.
    std::vector<Frame> ingest(const Frame& packet, std::uint64_t tArrivalUs);

    std::uint8_t device_id() const { return deviceId_; }
    int p() const { return p_; }
    int adc_bits() const { return adcBits_; }
    std::uint32_t expected_packet_id() const { return expected_; }
    std::optional<std::uint32_t> initial_packet_id() const { return initial_; }
    const std::optional<Frame>& hist_prev() const { return prev_; }
    const std::optional<Frame>& hist_last() const { return last_; }
    const SessionMetrics& metrics() const { return metrics_; }
    SessionMetrics& metrics() { return metrics_; }

private:
    void advance(const Frame& f);

    std::uint8_t deviceId_;
    int p_;
    int adcBits_;
    std::uint32_t expected_ = 0;
    std::optional<std::uint32_t> initial_;
    std::optional<Frame> prev_;
    std::optional<Frame> last_;
    SessionMetrics metrics_;
};

/// Multi-sender front end: demultiplexes by deviceId and optionally records
/// one WRS1 file per device.
class Receiver {
public:
    explicit Receiver(std::vector<DeviceConfig> devices = {}, int defaultP = 29);

    std::vector<Frame> ingest(const Frame& packet, std::uint64_t tArrivalUs);
    std::vector<Frame> ingest_bytes(std::span<const std::uint8_t> bytes, std::uint64_t tArrivalUs);

    /// Frames emitted from now on are appended to <dir>/device_<id>.wrs.
    void record_to(const std::string& dir);
    void flush();

    const std::map<int, DeviceSession>& sessions() const { return sessions_; }
    DeviceSession* session(int deviceId);
    std::uint64_t rejected_packets() const { return rejected_; }
    void count_rejected() { ++rejected_; }

    json metrics_json() const;

private:
    DeviceSession& session_for(const Frame& packet);

    std::vector<DeviceConfig> devices_;
    int defaultP_;
    std::map<int, DeviceSession> sessions_;
    std::optional<std::string> recordDir_;
    std::map<int, std::unique_ptr<RecordingWriter>> writers_;
    std::uint64_t rejected_ = 0;
};

std::string recording_path(const std::string& dir, int deviceId);

/// Writes each session's frames to its own file; returns the paths written.
std::vector<std::string> record(const std::map<int, std::vector<Frame>>& framesByDevice, const std::string& dir,
                                int adcBits = 12);

/// RMS error over all nodes and frames, normalized by ADC full scale.
double nrmse(std::span<const Frame> predicted, std::span<const Frame> truth, int adcBits = 12);

inline constexpr double kBatchSpeed = std::numeric_limits<double>::infinity();

struct ReplayOptions {
    std::optional<std::uint64_t> startUs;  // inclusive
    std::optional<std::uint64_t> endUs;    // exclusive
    double speed = 1.0;                    // kBatchSpeed emits without pacing
};

/// Frames in [startUs, endUs).
std::vector<Frame> select_frames(const Recording& rec, std::optional<std::uint64_t> startUs,
                                 std::optional<std::uint64_t> endUs);

/// Emits the selected frames, sleeping so that inter-frame gaps are scaled by
/// 1/speed. Returns the number of frames emitted; stops early if `cancel` is set.
std::size_t replay(const Recording& rec, const ReplayOptions& opts, const std::function<void(const Frame&)>& sink,
                   const std::atomic<bool>* cancel = nullptr);

}  // namespace wiresens
