#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "wiresens/config.hpp"
#include "wiresens/error.hpp"
#include "wiresens/packet.hpp"
#include "wiresens/recording.hpp"
#include "wiresens/server.hpp"
#include "wiresens/transport.hpp"

using namespace wiresens;
using namespace std::chrono_literals;
namespace fs = std::filesystem;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

fs::path write_config(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("wiresens_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path p = dir / "config.json";
    std::ofstream(p) << R"({"devices":[{"deviceId":1,"rows":32,"cols":32,"protocol":"wifi"},
                                       {"deviceId":2,"rows":16,"cols":16,"protocol":"ble"}]})";
    return p;
}

struct HttpResult {
    unsigned status;
    json body;
};

HttpResult request(std::uint16_t port, http::verb verb, const std::string& target, const std::string& body = "") {
    asio::io_context io;
    tcp::socket sock(io);
    sock.connect({asio::ip::make_address("127.0.0.1"), port});
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    req.body() = body;
    req.prepare_payload();
    http::write(sock, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(sock, buf, res);
    return {res.result_int(), json::parse(res.body())};
}

class WsClient {
public:
    explicit WsClient(std::uint16_t port) : ws_(io_) {
        tcp::resolver resolver(io_);
        asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/stream");
        reader_ = std::thread([this] {
            for (;;) {
                beast::flat_buffer buf;
                beast::error_code ec;
                ws_.read(buf, ec);
                std::lock_guard lock(mu_);
                if (ec) {
                    closed_ = true;
                    cv_.notify_all();
                    return;
                }
                inbox_.push_back(json::parse(beast::buffers_to_string(buf.data())));
                cv_.notify_all();
            }
        });
    }

    ~WsClient() {
        beast::error_code ec;
        ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
        ws_.next_layer().close(ec);
        reader_.join();
    }

    /// Takes up to `n` messages, waiting at most `budget` for them.
    std::vector<json> read(std::size_t n, std::chrono::milliseconds budget) {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, budget, [&] { return inbox_.size() >= n || closed_; });
        std::vector<json> out;
        while (!inbox_.empty() && out.size() < n) {
            out.push_back(std::move(inbox_.front()));
            inbox_.pop_front();
        }
        return out;
    }

private:
    asio::io_context io_;
    websocket::stream<tcp::socket> ws_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<json> inbox_;
    bool closed_ = false;
    std::thread reader_;
};

Frame full_frame(std::uint8_t dev, std::uint32_t id, std::uint64_t ts) {
    Frame f;
    f.deviceId = dev;
    f.packetId = id;
    f.timestampUs = ts;
    f.rows = 32;
    f.cols = 32;
    f.values.assign(1024, static_cast<std::uint16_t>(id % 4096));
    return f;
}

}  // namespace

TEST_SUITE("server") {

TEST_CASE("frame message shape") {
    Frame f = full_frame(3, 9, 1234);
    f.reconstructed = true;
    const json j = json::parse(frame_message(f));
    CHECK(j["type"] == "frame");
    CHECK(j["deviceId"] == 3);
    CHECK(j["packetId"] == 9);
    CHECK(j["tsUs"] == 1234);
    CHECK(j["rows"] == 32);
    CHECK(j["values"].size() == 1024);
    CHECK(j["reconstructed"] == true);
}

TEST_CASE("device list, metrics and layout persistence") {
    const fs::path cfg = write_config("srv_layout");
    ServeOptions o;
    o.configPath = cfg.string();
    o.port = 0;
    HubServer server(o);
    server.start();
    const auto port = server.port();

    auto devices = request(port, http::verb::get, "/devices");
    CHECK(devices.status == 200);
    REQUIRE(devices.body.size() == 2);
    CHECK(devices.body[1]["deviceId"] == 2);
    CHECK(devices.body[1]["rows"] == 16);

    CHECK(request(port, http::verb::get, "/metrics").status == 200);
    CHECK(request(port, http::verb::get, "/nope").status == 404);
    CHECK(request(port, http::verb::post, "/layout", "{bad").status == 400);
    CHECK(request(port, http::verb::post, "/replay/control", R"({"action":"play"})").status == 409);

    const json layout = {{"1", {{"positions", {{"0,0", {0.1, 0.2}}}}, {"deleted", {"3,4"}}, {"background", "bg.png"}}}};
    CHECK(request(port, http::verb::post, "/layout", layout.dump()).status == 200);
    CHECK(request(port, http::verb::get, "/layout").body == layout);
    server.stop();

    std::ifstream in(cfg);
    const json saved = json::parse(in);
    CHECK(saved["layout"] == layout);
    CHECK(parse_config(saved.dump()).size() == 2);

    // Layout survives a restart.
    HubServer again(o);
    again.start();
    CHECK(request(again.port(), http::verb::get, "/layout").body == layout);
}

TEST_CASE("live packets reach WebSocket subscribers at the sending rate") {
    const fs::path cfg = write_config("srv_live");
    ServeOptions o;
    o.configPath = cfg.string();
    o.port = 0;
    o.streamPort = 0;
    o.maxQueuedMessages = 1024;
    HubServer server(o);
    server.start();
    WsClient ws(server.port());
    std::this_thread::sleep_for(50ms);

    PacketSender sender(TransportKind::stream, "127.0.0.1", *server.stream_port());
    constexpr int kFps = 60;
    constexpr int kFrames = 60;
    const auto t0 = std::chrono::steady_clock::now();
    std::thread tx([&] {
        for (int i = 0; i < kFrames; ++i) {
            std::this_thread::sleep_until(t0 + std::chrono::microseconds(i * 1'000'000 / kFps));
            sender.send(encode_packet(full_frame(1, static_cast<std::uint32_t>(i), 0)));
        }
    });
    const auto msgs = ws.read(kFrames, 5000ms);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    tx.join();
    REQUIRE(msgs.size() == kFrames);
    CHECK(msgs.back()["packetId"] == kFrames - 1);
    CHECK(static_cast<double>(msgs.size()) / elapsed >= kFps * 0.9);

    const auto m = request(server.port(), http::verb::get, "/metrics").body;
    CHECK(m.dump().find("\"framesReceived\":60") != std::string::npos);
}

TEST_CASE("replay control: play, speed and pause") {
    const fs::path cfg = write_config("srv_replay");
    const fs::path rec = cfg.parent_path() / "device_1.wrs";
    std::vector<Frame> frames;
    for (std::uint32_t i = 0; i < 21; ++i) frames.push_back(full_frame(1, i, 1'000'000 + i * 20'000ULL));
    write_recording(rec.string(), {1, 32, 32, 12}, frames);

    ServeOptions o;
    o.configPath = cfg.string();
    o.port = 0;
    o.replayPaths = {rec.string()};
    HubServer server(o);
    server.start();
    WsClient ws(server.port());
    std::this_thread::sleep_for(50ms);

    // Nothing plays until asked.
    CHECK(ws.read(1, 150ms).empty());

    auto t0 = std::chrono::steady_clock::now();
    auto res = request(server.port(), http::verb::post, "/replay/control", R"({"action":"play","speed":2})");
    CHECK(res.status == 200);
    CHECK(res.body["playing"] == true);
    auto msgs = ws.read(21, 3000ms);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(msgs.size() == 21);
    CHECK(msgs.front()["tsUs"] == 1'000'000);
    // 400 ms of data at 2x.
    CHECK(wall == doctest::Approx(0.2).epsilon(0.35));

    // Selection [start, end) with a pause in between.
    request(server.port(), http::verb::post, "/replay/control",
            R"({"start":1100000,"end":1300000,"speed":1,"action":"play"})");
    msgs = ws.read(3, 2000ms);
    REQUIRE(msgs.size() == 3);
    CHECK(msgs[0]["tsUs"] == 1'100'000);
    res = request(server.port(), http::verb::post, "/replay/control", R"({"pause":true})");
    CHECK(res.body["playing"] == false);
    ws.read(1, 100ms);  // drain a frame that may have been in flight
    CHECK(ws.read(1, 300ms).empty());
    request(server.port(), http::verb::post, "/replay/control", R"({"action":"play"})");
    msgs = ws.read(20, 1000ms);
    CHECK(!msgs.empty());
    CHECK(msgs.back()["tsUs"] == 1'280'000);

    CHECK(request(server.port(), http::verb::post, "/replay/control", R"({"speed":0})").status == 400);
    CHECK(request(server.port(), http::verb::post, "/replay/control", R"({"action":"rewind"})").status == 400);
}

TEST_CASE("slow subscribers do not grow the queue without bound") {
    const fs::path cfg = write_config("srv_slow");
    ServeOptions o;
    o.configPath = cfg.string();
    o.port = 0;
    o.datagramPort = 0;
    o.maxQueuedMessages = 8;
    HubServer server(o);
    server.start();
    WsClient idle(server.port());  // never reads
    WsClient reader(server.port());
    std::this_thread::sleep_for(50ms);
    PacketSender sender(TransportKind::datagram, "127.0.0.1", *server.datagram_port());
    for (std::uint32_t i = 0; i < 300; ++i) {
        sender.send(encode_packet(full_frame(2, i, 0)));
        std::this_thread::sleep_for(1ms);
    }
    const auto got = reader.read(300, 3000ms);
    CHECK(!got.empty());
    CHECK(request(server.port(), http::verb::get, "/metrics").status == 200);
}

TEST_CASE("missing config fails to construct") {
    ServeOptions o;
    o.configPath = "/nonexistent/config.json";
    CHECK_THROWS_AS(HubServer{o}, IoError);
}

}
