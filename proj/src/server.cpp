#include "wiresens/server.hpp"

#include <algorithm>
#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "wiresens/error.hpp"
#include "wiresens/receiver.hpp"
#include "wiresens/recording.hpp"
#include "wiresens/transport.hpp"

namespace wiresens {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string frame_message(const Frame& f) {
    json j = {{"type", "frame"},
              {"deviceId", f.deviceId},
              {"packetId", f.packetId},
              {"tsUs", f.timestampUs},
              {"rows", f.rows},
              {"cols", f.cols},
              {"values", f.values},
              {"reconstructed", f.reconstructed}};
    return j.dump();
}

namespace {

class WsSession;

/// Registry of live /stream subscribers. Only touched on the io thread.
struct Broadcaster {
    std::set<std::shared_ptr<WsSession>> sessions;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, Broadcaster& hub, std::size_t maxQueued)
        : ws_(std::move(socket)), hub_(hub), maxQueued_(maxQueued) {}

    template <class Request>
    void accept(Request req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        auto self = shared_from_this();
        ws_.async_accept(req, [self](beast::error_code ec) {
            if (ec) return;
            self->hub_.sessions.insert(self);
            self->read();
        });
    }

    void send(std::shared_ptr<const std::string> msg) {
        if (closed_) return;
        // Slow clients lose their oldest pending frame; the one being written stays.
        if (queue_.size() >= maxQueued_) {
            auto victim = writing_ ? std::next(queue_.begin()) : queue_.begin();
            if (victim != queue_.end()) queue_.erase(victim);
        }
        queue_.push_back(std::move(msg));
        if (!writing_) write_next();
    }

private:
    void read() {
        auto self = shared_from_this();
        ws_.async_read(buffer_, [self](beast::error_code ec, std::size_t) {
            if (ec) {
                self->close();
                return;
            }
            self->buffer_.consume(self->buffer_.size());
            self->read();
        });
    }

    void write_next() {
        if (queue_.empty() || closed_) return;
        writing_ = true;
        auto self = shared_from_this();
        ws_.text(true);
        ws_.async_write(asio::buffer(*queue_.front()), [self](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) {
                self->close();
                return;
            }
            self->queue_.pop_front();
            self->write_next();
        });
    }

    void close() {
        closed_ = true;
        queue_.clear();
        hub_.sessions.erase(shared_from_this());
    }

    websocket::stream<beast::tcp_stream> ws_;
    Broadcaster& hub_;
    std::size_t maxQueued_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    bool writing_ = false;
    bool closed_ = false;
};

/// Paced playback over one or more recordings merged by timestamp.
class ReplayController {
public:
    using Sink = std::function<void(const Frame&)>;

    ReplayController(std::vector<Frame> frames, double speed, Sink sink)
        : frames_(std::move(frames)), speed_(speed), sink_(std::move(sink)) {
        std::stable_sort(frames_.begin(), frames_.end(),
                         [](const Frame& a, const Frame& b) { return a.timestampUs < b.timestampUs; });
        worker_ = std::thread([this] { loop(); });
    }

    ~ReplayController() {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        worker_.join();
    }

    /// Applies {start, end, speed, action} and returns the resulting state.
    json control(const json& cmd) {
        {
            std::lock_guard lock(mu_);
            if (cmd.contains("speed")) {
                const double s = cmd.at("speed").get<double>();
                if (!(s > 0)) throw ValidationError("speed", "speed must be positive");
                speed_ = s;
            }
            if (cmd.contains("start")) start_ = optional_ts(cmd.at("start"));
            if (cmd.contains("end")) end_ = optional_ts(cmd.at("end"));
            if (start_ && end_ && *start_ > *end_) throw ValidationError("start", "start must not exceed end");
            std::string action = cmd.value("action", std::string());
            if (action.empty() && cmd.value("play", false)) action = "play";
            if (action.empty() && cmd.value("pause", false)) action = "pause";
            if (!action.empty() && action != "play" && action != "pause")
                throw ValidationError("action", "action must be play or pause");
            // Play resumes from the current position unless a new start was
            // given or the selection has been exhausted.
            if (cmd.contains("start") || (action == "play" && !in_selection(index_))) index_ = first_index();
            if (action == "play") playing_ = true;
            if (action == "pause") playing_ = false;
            ++generation_;
            rebase();
        }
        cv_.notify_all();
        return state();
    }

    json state() const {
        std::lock_guard lock(mu_);
        json j = {{"playing", playing_}, {"speed", speed_}, {"position", index_}, {"frames", frames_.size()}};
        j["start"] = start_ ? json(*start_) : json(nullptr);
        j["end"] = end_ ? json(*end_) : json(nullptr);
        if (!frames_.empty()) {
            j["firstTsUs"] = frames_.front().timestampUs;
            j["lastTsUs"] = frames_.back().timestampUs;
        }
        return j;
    }

private:
    static std::optional<std::uint64_t> optional_ts(const json& v) {
        if (v.is_null()) return std::nullopt;
        return v.get<std::uint64_t>();
    }

    std::size_t first_index() const {
        if (!start_) return 0;
        auto it = std::lower_bound(frames_.begin(), frames_.end(), *start_,
                                   [](const Frame& f, std::uint64_t t) { return f.timestampUs < t; });
        return static_cast<std::size_t>(it - frames_.begin());
    }

    bool in_selection(std::size_t i) const {
        return i < frames_.size() && (!end_ || frames_[i].timestampUs < *end_);
    }

    void rebase() {
        anchorWall_ = std::chrono::steady_clock::now();
        anchorTs_ = in_selection(index_) ? frames_[index_].timestampUs : 0;
    }

    void loop() {
        std::unique_lock lock(mu_);
        while (!stopping_) {
            if (!playing_ || !in_selection(index_)) {
                if (playing_) playing_ = false;
                cv_.wait(lock);
                continue;
            }
            const Frame& f = frames_[index_];
            const double offsetUs = static_cast<double>(f.timestampUs - std::min(f.timestampUs, anchorTs_)) / speed_;
            const auto due = anchorWall_ + std::chrono::microseconds(static_cast<std::int64_t>(offsetUs));
            const std::uint64_t gen = generation_;
            if (cv_.wait_until(lock, due, [&] { return stopping_ || generation_ != gen; }))
                continue;  // state changed while waiting
            Frame copy = f;
            ++index_;
            lock.unlock();
            sink_(copy);
            lock.lock();
        }
    }

    std::vector<Frame> frames_;
    double speed_;
    Sink sink_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::optional<std::uint64_t> start_;
    std::optional<std::uint64_t> end_;
    std::size_t index_ = 0;
    std::uint64_t generation_ = 0;
    bool playing_ = false;
    bool stopping_ = false;
    std::chrono::steady_clock::time_point anchorWall_ = std::chrono::steady_clock::now();
    std::uint64_t anchorTs_ = 0;
    std::thread worker_;
};

}  // namespace

struct HubServer::Impl {
    ServeOptions opts;
    json configDoc;
    std::vector<DeviceConfig> devices;
    std::mutex configMu;

    asio::io_context io;
    std::optional<tcp::acceptor> acceptor;
    std::thread ioThread;
    Broadcaster hub;

    std::shared_ptr<ArrivalQueue> arrivals = std::make_shared<ArrivalQueue>();
    std::unique_ptr<PacketListener> streamListener;
    std::unique_ptr<PacketListener> datagramListener;
    std::thread ingestThread;
    std::atomic<bool> stopping{false};
    std::mutex receiverMu;
    std::unique_ptr<Receiver> receiver;
    std::unique_ptr<ReplayController> replay;
    bool started = false;

    void load_config() {
        configDoc = parse_json_text(read_text_file(opts.configPath));
        devices = parse_config(configDoc.dump());
    }

    void persist_layout(const json& layout) {
        std::lock_guard lock(configMu);
        json doc = configDoc;
        if (!doc.is_object()) doc = json{{"devices", doc}};
        doc["layout"] = layout;
        const std::string tmp = opts.configPath + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write " + tmp);
            out << doc.dump(2) << '\n';
            if (!out) throw IoError("write failed: " + tmp);
        }
        std::filesystem::rename(tmp, opts.configPath);
        configDoc = std::move(doc);
    }

    json layout() {
        std::lock_guard lock(configMu);
        if (configDoc.is_object() && configDoc.contains("layout")) return configDoc["layout"];
        return json::object();
    }

    void broadcast(const Frame& f) {
        auto msg = std::make_shared<const std::string>(frame_message(f));
        asio::post(io, [this, msg] {
            for (const auto& s : std::vector(hub.sessions.begin(), hub.sessions.end())) s->send(msg);
        });
    }

    void ingest_loop() {
        while (!stopping) {
            auto a = arrivals->pop(std::chrono::milliseconds(100));
            if (!a) continue;
            std::vector<Frame> frames;
            {
                std::lock_guard lock(receiverMu);
                if (!a->frame) {
                    receiver->count_rejected();
                    continue;
                }
                try {
                    frames = receiver->ingest(*a->frame, a->tArrivalUs);
                } catch (const Error&) {
                    receiver->count_rejected();
                    continue;
                }
            }
            for (const auto& f : frames) broadcast(f);
        }
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req) {
        auto reply = [&](http::status status, const json& body) {
            http::response<http::string_body> res{status, req.version()};
            res.set(http::field::content_type, "application/json");
            res.set(http::field::access_control_allow_origin, "*");
            res.keep_alive(req.keep_alive());
            res.body() = body.dump();
            res.prepare_payload();
            return res;
        };
        const std::string target(req.target());
        try {
            if (req.method() == http::verb::get && target == "/devices") {
                json list = json::array();
                for (const auto& d : devices) list.push_back(to_json(d));
                return reply(http::status::ok, list);
            }
            if (req.method() == http::verb::get && target == "/metrics") {
                json m;
                {
                    std::lock_guard lock(receiverMu);
                    m = receiver->metrics_json();
                }
                m["replay"] = replay ? replay->state() : json(nullptr);
                m["subscribers"] = hub.sessions.size();
                return reply(http::status::ok, m);
            }
            if (req.method() == http::verb::get && target == "/layout") return reply(http::status::ok, layout());
            if (req.method() == http::verb::post && target == "/layout") {
                json body = parse_json_text(req.body());
                if (!body.is_object()) throw ValidationError("layout", "layout must be a JSON object");
                persist_layout(body);
                return reply(http::status::ok, body);
            }
            if (req.method() == http::verb::post && target == "/replay/control") {
                if (!replay) return reply(http::status::conflict, {{"error", "no replay source configured"}});
                return reply(http::status::ok, replay->control(parse_json_text(req.body())));
            }
            return reply(http::status::not_found, {{"error", "not found: " + target}});
        } catch (const ParseError& e) {
            return reply(http::status::bad_request, {{"error", e.what()}});
        } catch (const ValidationError& e) {
            return reply(http::status::bad_request, {{"error", e.what()}});
        } catch (const json::exception& e) {
            return reply(http::status::bad_request, {{"error", e.what()}});
        } catch (const std::exception& e) {
            return reply(http::status::internal_server_error, {{"error", e.what()}});
        }
    }

    void accept() {
        acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            serve_http(std::make_shared<beast::tcp_stream>(std::move(socket)));
            accept();
        });
    }

    void serve_http(std::shared_ptr<beast::tcp_stream> stream) {
        auto buffer = std::make_shared<beast::flat_buffer>();
        auto req = std::make_shared<http::request<http::string_body>>();
        http::async_read(*stream, *buffer, *req, [this, stream, buffer, req](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (websocket::is_upgrade(*req)) {
                if (req->target() == "/stream") {
                    std::make_shared<WsSession>(stream->release_socket(), hub, opts.maxQueuedMessages)
                        ->accept(std::move(*req));
                }
                return;
            }
            auto res = std::make_shared<http::response<http::string_body>>(handle(*req));
            http::async_write(*stream, *res, [this, stream, res](beast::error_code ec2, std::size_t) {
                if (ec2 || !res->keep_alive()) {
                    beast::error_code ignored;
                    stream->socket().shutdown(tcp::socket::shutdown_send, ignored);
                    return;
                }
                serve_http(stream);
            });
        });
    }
};

HubServer::HubServer(ServeOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->opts = std::move(options);
    impl_->load_config();
    impl_->receiver = std::make_unique<Receiver>(impl_->devices);
    if (impl_->opts.recordDir) impl_->receiver->record_to(*impl_->opts.recordDir);
}

HubServer::~HubServer() { stop(); }

void HubServer::start() {
    auto& d = *impl_;
    if (d.started) return;
    try {
        tcp::endpoint ep(asio::ip::make_address(d.opts.bindAddress), d.opts.port);
        d.acceptor.emplace(d.io);
        d.acceptor->open(ep.protocol());
        d.acceptor->set_option(tcp::acceptor::reuse_address(true));
        d.acceptor->bind(ep);
        d.acceptor->listen();
    } catch (const boost::system::system_error& e) {
        throw IoError("cannot bind HTTP port " + std::to_string(d.opts.port) + ": " + e.what());
    }
    if (d.opts.streamPort)
        d.streamListener =
            std::make_unique<PacketListener>(TransportKind::stream, *d.opts.streamPort, d.arrivals, d.opts.bindAddress);
    if (d.opts.datagramPort)
        d.datagramListener = std::make_unique<PacketListener>(TransportKind::datagram, *d.opts.datagramPort,
                                                              d.arrivals, d.opts.bindAddress);
    if (!d.opts.replayPaths.empty()) {
        std::vector<Frame> frames;
        for (const auto& p : d.opts.replayPaths) {
            Recording rec = read_recording(p);
            frames.insert(frames.end(), rec.frames.begin(), rec.frames.end());
        }
        d.replay = std::make_unique<ReplayController>(std::move(frames), d.opts.replaySpeed,
                                                      [&d](const Frame& f) { d.broadcast(f); });
        if (d.opts.autoplay) d.replay->control({{"action", "play"}});
    }
    d.accept();
    d.ioThread = std::thread([&d] { d.io.run(); });
    d.ingestThread = std::thread([&d] { d.ingest_loop(); });
    d.started = true;
}

void HubServer::stop() {
    if (!impl_ || !impl_->started) return;
    auto& d = *impl_;
    d.stopping = true;
    d.arrivals->close();
    if (d.ingestThread.joinable()) d.ingestThread.join();
    d.replay.reset();
    d.streamListener.reset();
    d.datagramListener.reset();
    d.io.stop();
    if (d.ioThread.joinable()) d.ioThread.join();
    {
        std::lock_guard lock(d.receiverMu);
        d.receiver->flush();
    }
    d.started = false;
}

std::uint16_t HubServer::port() const {
    return impl_->acceptor ? impl_->acceptor->local_endpoint().port() : impl_->opts.port;
}

std::optional<std::uint16_t> HubServer::stream_port() const {
    if (!impl_->streamListener) return std::nullopt;
    return impl_->streamListener->port();
}

std::optional<std::uint16_t> HubServer::datagram_port() const {
    if (!impl_->datagramListener) return std::nullopt;
    return impl_->datagramListener->port();
}

}  // namespace wiresens
