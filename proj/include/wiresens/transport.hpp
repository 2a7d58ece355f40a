#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include "wiresens/types.hpp"

namespace wiresens {

enum class TransportKind { stream, datagram };

/// One packet as seen by the hub: either a decoded frame or a decode error.
struct Arrival {
    std::uint64_t tArrivalUs = 0;  // microseconds on the hub's steady clock
    std::optional<Frame> frame;
    std::string error;
    std::string peer;
};

/// Many producers (one per connection or socket), one consumer.
class ArrivalQueue {
public:
    void push(Arrival a);
    std::optional<Arrival> pop(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Arrival> items_;
    bool closed_ = false;
};

std::uint64_t hub_clock_us();

/// Listens on a port and decodes incoming WirePackets onto an ArrivalQueue.
/// Stream framing is a u32 little-endian length followed by the packet;
/// datagrams carry exactly one packet each. Malformed packets become Arrival
/// entries with `error` set; the connection stays open.
class PacketListener {
public:
    PacketListener(TransportKind kind, std::uint16_t port, std::shared_ptr<ArrivalQueue> queue,
                   const std::string& bindAddress = "127.0.0.1");
    ~PacketListener();
    PacketListener(const PacketListener&) = delete;
    PacketListener& operator=(const PacketListener&) = delete;

    std::uint16_t port() const;
    TransportKind kind() const;
    const std::shared_ptr<ArrivalQueue>& queue() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience: a listener with its own queue. Throws IoError on bind failure.
std::unique_ptr<PacketListener> transport_listen(TransportKind kind, std::uint16_t port,
                                                 const std::string& bindAddress = "127.0.0.1");

class PacketSender {
public:
    PacketSender(TransportKind kind, const std::string& host, std::uint16_t port);
    ~PacketSender();
    PacketSender(const PacketSender&) = delete;
    PacketSender& operator=(const PacketSender&) = delete;

    /// Sends raw WirePacket bytes, adding the length prefix for streams.
    void send(std::span<const std::uint8_t> packet);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace wiresens
