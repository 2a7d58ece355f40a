#pragma once

#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "wiresens/config.hpp"
#include "wiresens/sensor.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

/// Parameterized stand-in for a radio protocol. Loss per transmission attempt is
///   min(1, baseLoss + contentionCoeff * max(0, offeredLoad / capacityFps - 1))
/// where offeredLoad counts attempts from all senders over the trailing window.
struct ProtocolModel {
    Protocol name = Protocol::wifi;
    bool ordered = true;
    bool reliable = true;
    std::int64_t airtimeUsPerPacket = 4000;
    double capacityFps = 250.0;
    double baseLoss = 0.0;
    double contentionCoeff = 0.5;
    int maxRetries = 8;
    std::int64_t loadWindowUs = 2'000'000;
    /// Extra random delivery latency in [0, jitter); only honored by unordered models.
    std::int64_t latencyJitterUs = 0;
    /// Relative capacity variation drawn per attempt; 0 disables it.
    double capacityJitter = 0.0;

    friend bool operator==(const ProtocolModel&, const ProtocolModel&) = default;
};

ProtocolModel default_protocol_model(Protocol p);
void validate(const ProtocolModel& m);
ProtocolModel protocol_model_from_json(const json& j);
json to_json(const ProtocolModel& m);

enum class DeliveryStatus : std::uint8_t { delivered, retransmitted, lost };

struct DeliveryOutcome {
    DeliveryStatus status = DeliveryStatus::delivered;
    std::uint64_t deliveredAtUs = 0;  // valid unless lost
    std::uint64_t senderFreeAtUs = 0; // end of the last attempt's airtime
    int attempts = 1;
};

/// Shared medium. Deterministic for a given seed and offer sequence.
class Channel {
public:
    Channel(ProtocolModel model, std::uint64_t seed);

    DeliveryOutcome offer(int senderId, std::uint64_t tUs);

    double offered_load_fps(std::uint64_t tUs) const;
    double loss_probability(std::uint64_t tUs) const;
    const ProtocolModel& model() const { return model_; }

private:
    double loss_probability(std::uint64_t tUs, double capacity) const;

    ProtocolModel model_;
    std::mt19937_64 rng_;
    std::multiset<std::uint64_t> attempts_;
    std::map<int, std::uint64_t> lastDelivery_;
};

/// Min-heap of timestamped events with a total order on (time, sender, sequence).
template <class Payload>
class EventQueue {
public:
    struct Event {
        std::uint64_t tUs;
        int senderId;
        std::uint64_t seq;
        Payload payload;
    };

    void push(std::uint64_t tUs, int senderId, Payload payload) {
        heap_.push(Event{tUs, senderId, next_++, std::move(payload)});
    }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Event& top() const { return heap_.top(); }
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        now_ = e.tUs;
        return e;
    }
    std::uint64_t now() const { return now_; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.tUs != b.tUs) return a.tUs > b.tUs;
            if (a.senderId != b.senderId) return a.senderId > b.senderId;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_ = 0;
    std::uint64_t now_ = 0;
};

struct SenderStats {
    int deviceId = 0;
    std::uint64_t framesScanned = 0;
    std::uint64_t sent = 0;        // packets handed to the channel
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
    std::uint64_t inFlight = 0;    // delivery scheduled past the horizon
    std::uint64_t retransmissions = 0;
    std::uint64_t framesReconstructed = 0;
    std::uint64_t framesDropped = 0;  // late/duplicate at the receiver
    double fps = 0.0;
    double lossPct = 0.0;
    double nrmse = 0.0;  // receiver stream vs device scans
};

struct Trace {
    std::uint64_t durationUs = 0;
    std::uint64_t seed = 0;
    Protocol protocol = Protocol::wifi;
    std::vector<SenderStats> stats;
    /// Receiver output per device: received and reconstructed frames, arrival-stamped.
    std::map<int, std::vector<Frame>> received;
    /// Every scan taken by each device (ground truth), when requested.
    std::map<int, std::vector<Frame>> truth;
};

struct ScenarioOptions {
    bool keepTruth = false;
    /// Start offset between consecutive senders so they do not scan in lockstep.
    std::uint64_t senderStaggerUs = 1000;
};

/// 1-5 devices sharing one medium. Deterministic for identical inputs.
Trace run_scenario(const std::vector<DeviceConfig>& devices, const ProtocolModel& model,
                   const StimulusScript& stimulus, std::uint64_t durationUs, std::uint64_t seed,
                   const ScenarioOptions& options = {});

/// Stats JSON with the documented field names.
json stats_json(const Trace& trace);

}  // namespace wiresens
