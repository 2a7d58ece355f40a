#include "wiresens/channel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"
#include "wiresens/receiver.hpp"

namespace wiresens {

ProtocolModel default_protocol_model(Protocol p) {
    ProtocolModel m;
    m.name = p;
    switch (p) {
        case Protocol::wifi:
            // TCP over 5 GHz: ordered, retransmitting, wide medium.
            m.ordered = true;
            m.reliable = true;
            m.airtimeUsPerPacket = 4000;
            m.capacityFps = 250.0;
            m.baseLoss = 0.0;
            m.contentionCoeff = 0.5;
            break;
        case Protocol::ble:
            m.ordered = true;
            m.reliable = true;
            m.airtimeUsPerPacket = 1'166'000;
            m.capacityFps = 3.0;
            m.baseLoss = 0.001;
            m.contentionCoeff = 0.8;
            break;
        case Protocol::espnow:
            m.ordered = false;
            m.reliable = false;
            m.airtimeUsPerPacket = 64'800;
            m.capacityFps = 40.0;
            m.baseLoss = 0.002;
            m.contentionCoeff = 0.6;
            m.latencyJitterUs = 2000;
            break;
    }
    return m;
}

void validate(const ProtocolModel& m) {
    if (m.airtimeUsPerPacket <= 0) throw ValidationError("airtimeUsPerPacket", "airtimeUsPerPacket must be positive");
    if (!(m.capacityFps > 0)) throw ValidationError("capacityFps", "capacityFps must be positive");
    if (!(m.baseLoss >= 0 && m.baseLoss <= 1)) throw ValidationError("baseLoss", "baseLoss must be in [0, 1]");
    if (!(m.contentionCoeff >= 0)) throw ValidationError("contentionCoeff", "contentionCoeff must be >= 0");
    if (m.maxRetries < 0) throw ValidationError("maxRetries", "maxRetries must be >= 0");
    if (m.loadWindowUs <= 0) throw ValidationError("loadWindowUs", "loadWindowUs must be positive");
    if (m.latencyJitterUs < 0) throw ValidationError("latencyJitterUs", "latencyJitterUs must be >= 0");
    if (!(m.capacityJitter >= 0 && m.capacityJitter < 1))
        throw ValidationError("capacityJitter", "capacityJitter must be in [0, 1)");
}

ProtocolModel protocol_model_from_json(const json& j) {
    if (j.is_string()) return default_protocol_model(protocol_from_string(j.get<std::string>()));
    if (!j.is_object()) throw ValidationError("protocol", "protocol must be a name or an object");
    ProtocolModel m = default_protocol_model(protocol_from_string(j.value("name", std::string("wifi"))));
    try {
        m.ordered = j.value("ordered", m.ordered);
        m.reliable = j.value("reliable", m.reliable);
        m.airtimeUsPerPacket = j.value("airtimeUsPerPacket", m.airtimeUsPerPacket);
        m.capacityFps = j.value("capacityFps", m.capacityFps);
        m.baseLoss = j.value("baseLoss", m.baseLoss);
        m.contentionCoeff = j.value("contentionCoeff", m.contentionCoeff);
        m.maxRetries = j.value("maxRetries", m.maxRetries);
        m.loadWindowUs = j.value("loadWindowUs", m.loadWindowUs);
        m.latencyJitterUs = j.value("latencyJitterUs", m.latencyJitterUs);
        m.capacityJitter = j.value("capacityJitter", m.capacityJitter);
    } catch (const json::type_error& e) {
        throw ValidationError("protocol", std::string("protocol model: ") + e.what());
    }
    validate(m);
    return m;
}

json to_json(const ProtocolModel& m) {
    return {{"name", std::string(to_string(m.name))},
            {"ordered", m.ordered},
            {"reliable", m.reliable},
            {"airtimeUsPerPacket", m.airtimeUsPerPacket},
            {"capacityFps", m.capacityFps},
            {"baseLoss", m.baseLoss},
            {"contentionCoeff", m.contentionCoeff},
            {"maxRetries", m.maxRetries},
            {"loadWindowUs", m.loadWindowUs},
            {"latencyJitterUs", m.latencyJitterUs},
            {"capacityJitter", m.capacityJitter}};
}

Channel::Channel(ProtocolModel model, std::uint64_t seed) : model_(std::move(model)), rng_(seed) {
    validate(model_);
}

double Channel::offered_load_fps(std::uint64_t tUs) const {
    const std::uint64_t w = static_cast<std::uint64_t>(model_.loadWindowUs);
    const std::uint64_t from = tUs >= w ? tUs - w + 1 : 0;
    const auto n = std::distance(attempts_.lower_bound(from), attempts_.upper_bound(tUs));
    return static_cast<double>(n) * 1e6 / static_cast<double>(w);
}

double Channel::loss_probability(std::uint64_t tUs, double capacity) const {
    const double excess = std::max(0.0, offered_load_fps(tUs) / capacity - 1.0);
    return std::min(1.0, model_.baseLoss + model_.contentionCoeff * excess);
}

double Channel::loss_probability(std::uint64_t tUs) const { return loss_probability(tUs, model_.capacityFps); }

DeliveryOutcome Channel::offer(int senderId, std::uint64_t tUs) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto airtime = static_cast<std::uint64_t>(model_.airtimeUsPerPacket);
    const int maxAttempts = model_.reliable ? 1 + model_.maxRetries : 1;

    DeliveryOutcome out;
    std::uint64_t t = tUs;
    bool delivered = false;
    int attempt = 0;
    while (attempt < maxAttempts) {
        ++attempt;
        attempts_.insert(t);
        double capacity = model_.capacityFps;
        if (model_.capacityJitter > 0) capacity *= 1.0 + model_.capacityJitter * (2.0 * unit(rng_) - 1.0);
        const double pLoss = loss_probability(t, capacity);
        if (unit(rng_) >= pLoss) {
            delivered = true;
            break;
        }
        if (attempt < maxAttempts) t += airtime;
    }
    out.attempts = attempt;
    out.senderFreeAtUs = t + airtime;

    // Offers arrive in near time order; anything two windows old is dead.
    const auto keep = 2 * static_cast<std::uint64_t>(model_.loadWindowUs);
    const std::uint64_t horizon = tUs >= keep ? tUs - keep : 0;
    attempts_.erase(attempts_.begin(), attempts_.lower_bound(horizon));

    if (!delivered) {
        out.status = DeliveryStatus::lost;
        return out;
    }
    out.status = attempt > 1 ? DeliveryStatus::retransmitted : DeliveryStatus::delivered;
    std::uint64_t at = t + airtime;
    if (!model_.ordered && model_.latencyJitterUs > 0) {
        std::uniform_int_distribution<std::int64_t> jitter(0, model_.latencyJitterUs - 1);
        at += static_cast<std::uint64_t>(jitter(rng_));
    }
    if (model_.ordered) {
        auto& last = lastDelivery_[senderId];
        at = std::max(at, last);
        last = at;
    }
    out.deliveredAtUs = at;
    return out;
}

namespace {

struct SimEvent {
    bool isDelivery = false;
    std::size_t device = 0;
    Bytes packet;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct TruthTracker {
    std::deque<Frame> pending;
    double sq = 0.0;
    std::uint64_t n = 0;

    void match(const Frame& emitted) {
        while (!pending.empty() && pending.front().packetId < emitted.packetId) pending.pop_front();
        if (pending.empty() || pending.front().packetId != emitted.packetId) return;
        const auto& truth = pending.front().values;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double e = static_cast<double>(emitted.values[i]) - static_cast<double>(truth[i]);
            sq += e * e;
        }
        n += truth.size();
        pending.pop_front();
    }
};

}  // namespace

Trace run_scenario(const std::vector<DeviceConfig>& devices, const ProtocolModel& model,
                   const StimulusScript& stimulus, std::uint64_t durationUs, std::uint64_t seed,
                   const ScenarioOptions& options) {
    if (devices.empty() || devices.size() > 5)
        throw ValidationError("devices", "scenario needs 1 to 5 devices (got " + std::to_string(devices.size()) + ")");
    for (const auto& d : devices) {
        validate(d);
        stimulus.validate(d.rows, d.cols);
    }
    validate(model);

    Trace trace;
    trace.durationUs = durationUs;
    trace.seed = seed;
    trace.protocol = model.name;

    std::vector<DeviceState> states;
    std::vector<RenderContext> renders;
    std::vector<SenderStats> stats(devices.size());
    std::vector<TruthTracker> truth(devices.size());
    std::map<int, std::size_t> indexOf;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        states.emplace_back(devices[i]);
        renders.emplace_back(stimulus, devices[i].vRef, devices[i].vSupply, devices[i].adcBits,
                             mix_seed(seed, static_cast<std::uint64_t>(devices[i].deviceId)));
        stats[i].deviceId = devices[i].deviceId;
        if (!indexOf.emplace(devices[i].deviceId, i).second)
            throw ValidationError("deviceId", "duplicate deviceId " + std::to_string(devices[i].deviceId));
    }

    Channel channel(model, mix_seed(seed, 0xC4A77E1ULL));
    Receiver receiver(devices);
    EventQueue<SimEvent> queue;
    for (std::size_t i = 0; i < devices.size(); ++i)
        queue.push(i * options.senderStaggerUs, devices[i].deviceId, SimEvent{false, i, {}});

    while (!queue.empty()) {
        auto ev = queue.pop();
        const std::size_t i = ev.payload.device;
        const DeviceConfig& cfg = devices[i];
        if (ev.payload.isDelivery) {
            if (ev.tUs >= durationUs) {
                ++stats[i].inFlight;
                continue;
            }
            ++stats[i].delivered;
            for (const Frame& f : receiver.ingest_bytes(ev.payload.packet, ev.tUs)) {
                truth[i].match(f);
                trace.received[cfg.deviceId].push_back(f);
            }
            continue;
        }
        if (ev.tUs >= durationUs) continue;

        const std::uint64_t t = ev.tUs;
        const ReadArea area = cfg.readArea.normalized();
        const auto scanUs = static_cast<std::uint64_t>(area.rows() * area.cols() * cfg.nodeReadUs);
        RawField field = renders[i].render(t, cfg.rows, cfg.cols);
        DeviceStep step = device_step(states[i], t, field);
        ++stats[i].framesScanned;
        truth[i].pending.push_back(step.frame);
        if (options.keepTruth) trace.truth[cfg.deviceId].push_back(step.frame);

        std::uint64_t busyUntil = t + scanUs;
        if (step.packet) {
            ++stats[i].sent;
            DeliveryOutcome outcome = channel.offer(cfg.deviceId, busyUntil);
            stats[i].retransmissions += static_cast<std::uint64_t>(outcome.attempts - 1);
            busyUntil = outcome.senderFreeAtUs;
            if (outcome.status == DeliveryStatus::lost) {
                ++stats[i].lost;
            } else {
                queue.push(outcome.deliveredAtUs, cfg.deviceId, SimEvent{true, i, std::move(*step.packet)});
            }
        }
        queue.push(busyUntil + static_cast<std::uint64_t>(cfg.scanDelayUs), cfg.deviceId, SimEvent{false, i, {}});
    }

    const double seconds = static_cast<double>(durationUs) / 1e6;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        auto& s = stats[i];
        if (const DeviceSession* session = receiver.session(devices[i].deviceId)) {
            s.framesReconstructed = session->metrics().framesReconstructed;
            s.framesDropped = session->metrics().framesLost;
        }
        s.fps = seconds > 0 ? static_cast<double>(s.delivered) / seconds : 0.0;
        const auto decided = s.delivered + s.lost;
        s.lossPct = decided == 0 ? 0.0 : 100.0 * static_cast<double>(s.lost) / static_cast<double>(decided);
        s.nrmse = truth[i].n == 0 ? 0.0
                                  : std::sqrt(truth[i].sq / static_cast<double>(truth[i].n)) /
                                        static_cast<double>(devices[i].adc_max());
    }
    trace.stats = std::move(stats);
    return trace;
}

json stats_json(const Trace& trace) {
    json deviceIds = json::array(), fps = json::array(), loss = json::array(), recon = json::array(),
         err = json::array(), senders = json::array();
    for (const auto& s : trace.stats) {
        deviceIds.push_back(s.deviceId);
        fps.push_back(s.fps);
        loss.push_back(s.lossPct);
        recon.push_back(s.framesReconstructed);
        err.push_back(s.nrmse);
        senders.push_back({{"deviceId", s.deviceId},
                           {"framesScanned", s.framesScanned},
                           {"sent", s.sent},
                           {"delivered", s.delivered},
                           {"lost", s.lost},
                           {"inFlight", s.inFlight},
                           {"retransmissions", s.retransmissions},
                           {"framesReconstructed", s.framesReconstructed},
                           {"framesDropped", s.framesDropped}});
    }
    return {{"schemaVersion", 1},
            {"protocol", std::string(to_string(trace.protocol))},
            {"durationUs", trace.durationUs},
            {"seed", trace.seed},
            {"deviceIds", std::move(deviceIds)},
            {"fpsPerSender", std::move(fps)},
            {"lossPctPerSender", std::move(loss)},
            {"framesReconstructed", std::move(recon)},
            {"nrmse", std::move(err)},
            {"senders", std::move(senders)}};
}

}  // namespace wiresens
