#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wiresens/config.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

struct ServeOptions {
    std::string configPath;
    std::string bindAddress = "127.0.0.1";
    std::uint16_t port = 8080;
    std::optional<std::uint16_t> streamPort;    // live stream transport
    std::optional<std::uint16_t> datagramPort;  // live datagram transport
    std::vector<std::string> replayPaths;       // WRS1 files served through /replay/control
    double replaySpeed = 1.0;
    bool autoplay = false;
    std::optional<std::string> recordDir;       // record live sessions here
    /// Per-client outbound WebSocket backlog; older frames are dropped beyond it.
    std::size_t maxQueuedMessages = 64;
};

/// JSON message pushed to /stream subscribers for every frame.
std::string frame_message(const Frame& f);

/// HTTP + WebSocket hub for the browser UI.
///   GET  /devices          configured devices
///   GET  /metrics          receiver and replay state
///   GET  /layout           persisted layout
///   POST /layout           persist layout into the config file
///   POST /replay/control   {start, end, speed, action: "play" | "pause"}
///   WS   /stream           frame messages
class HubServer {
public:
    explicit HubServer(ServeOptions options);
    ~HubServer();
    HubServer(const HubServer&) = delete;
    HubServer& operator=(const HubServer&) = delete;

    /// Binds and starts background threads. Throws IoError on bind failure.
    void start();
    void stop();

    std::uint16_t port() const;
    std::optional<std::uint16_t> stream_port() const;
    std::optional<std::uint16_t> datagram_port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace wiresens
