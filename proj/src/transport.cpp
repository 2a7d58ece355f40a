#include "wiresens/transport.hpp"

#include <array>
#include <boost/asio.hpp>
#include <thread>
#include <vector>

#include "wiresens/error.hpp"
#include "wiresens/packet.hpp"

namespace wiresens {

namespace asio = boost::asio;
using asio::ip::tcp;
using asio::ip::udp;

namespace {

constexpr std::size_t kMaxPacketBytes = 64 * 1024;

Arrival decode_arrival(std::span<const std::uint8_t> bytes, std::string peer) {
    Arrival a;
    a.tArrivalUs = hub_clock_us();
    a.peer = std::move(peer);
    try {
        a.frame = decode_packet(bytes);
    } catch (const CodecError& e) {
        a.error = e.what();
    }
    return a;
}

}  // namespace

std::uint64_t hub_clock_us() {
    static const auto origin = std::chrono::steady_clock::now();
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - origin).count());
}

void ArrivalQueue::push(Arrival a) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        items_.push_back(std::move(a));
    }
    cv_.notify_one();
}

std::optional<Arrival> ArrivalQueue::pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; })) return std::nullopt;
    if (items_.empty()) return std::nullopt;
    Arrival a = std::move(items_.front());
    items_.pop_front();
    return a;
}

void ArrivalQueue::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool ArrivalQueue::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

namespace {

class StreamConnection : public std::enable_shared_from_this<StreamConnection> {
public:
    StreamConnection(tcp::socket socket, std::shared_ptr<ArrivalQueue> queue)
        : socket_(std::move(socket)), queue_(std::move(queue)) {
        boost::system::error_code ec;
        auto ep = socket_.remote_endpoint(ec);
        if (!ec) peer_ = ep.address().to_string() + ":" + std::to_string(ep.port());
    }

    void start() { read_length(); }

private:
    void read_length() {
        auto self = shared_from_this();
        asio::async_read(socket_, asio::buffer(lengthBuf_), [self](boost::system::error_code ec, std::size_t) {
            if (ec) return;
            const std::uint32_t n = static_cast<std::uint32_t>(self->lengthBuf_[0]) |
                                    static_cast<std::uint32_t>(self->lengthBuf_[1]) << 8 |
                                    static_cast<std::uint32_t>(self->lengthBuf_[2]) << 16 |
                                    static_cast<std::uint32_t>(self->lengthBuf_[3]) << 24;
            if (n == 0 || n > kMaxPacketBytes) {
                Arrival a;
                a.tArrivalUs = hub_clock_us();
                a.peer = self->peer_;
                a.error = "stream frame length " + std::to_string(n) + " out of bounds; connection closed";
                self->queue_->push(std::move(a));
                return;
            }
            self->body_.resize(n);
            self->read_body();
        });
    }

    void read_body() {
        auto self = shared_from_this();
        asio::async_read(socket_, asio::buffer(body_), [self](boost::system::error_code ec, std::size_t) {
            if (ec) return;
            self->queue_->push(decode_arrival(self->body_, self->peer_));
            self->read_length();
        });
    }

    tcp::socket socket_;
    std::shared_ptr<ArrivalQueue> queue_;
    std::string peer_;
    std::array<std::uint8_t, 4> lengthBuf_{};
    std::vector<std::uint8_t> body_;
};

}  // namespace

struct PacketListener::Impl {
    TransportKind kind;
    std::shared_ptr<ArrivalQueue> queue;
    asio::io_context io;
    std::optional<tcp::acceptor> acceptor;
    std::optional<udp::socket> udpSocket;
    std::array<std::uint8_t, kMaxPacketBytes> datagram{};
    udp::endpoint sender;
    std::thread worker;
    std::uint16_t boundPort = 0;

    void accept() {
        acceptor->async_accept([this](boost::system::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<StreamConnection>(std::move(socket), queue)->start();
            accept();
        });
    }

    void receive() {
        udpSocket->async_receive_from(asio::buffer(datagram), sender,
                                      [this](boost::system::error_code ec, std::size_t n) {
                                          if (ec == asio::error::operation_aborted) return;
                                          if (!ec) {
                                              queue->push(decode_arrival(
                                                  std::span(datagram.data(), n),
                                                  sender.address().to_string() + ":" + std::to_string(sender.port())));
                                          }
                                          receive();
                                      });
    }
};

PacketListener::PacketListener(TransportKind kind, std::uint16_t port, std::shared_ptr<ArrivalQueue> queue,
                               const std::string& bindAddress)
    : impl_(std::make_unique<Impl>()) {
    impl_->kind = kind;
    impl_->queue = std::move(queue);
    try {
        const auto addr = asio::ip::make_address(bindAddress);
        if (kind == TransportKind::stream) {
            impl_->acceptor.emplace(impl_->io);
            tcp::endpoint ep(addr, port);
            impl_->acceptor->open(ep.protocol());
            impl_->acceptor->set_option(tcp::acceptor::reuse_address(true));
            impl_->acceptor->bind(ep);
            impl_->acceptor->listen();
            impl_->boundPort = impl_->acceptor->local_endpoint().port();
            impl_->accept();
        } else {
            impl_->udpSocket.emplace(impl_->io, udp::endpoint(addr, port));
            impl_->boundPort = impl_->udpSocket->local_endpoint().port();
            impl_->receive();
        }
    } catch (const boost::system::system_error& e) {
        throw IoError("cannot bind port " + std::to_string(port) + ": " + e.what());
    }
    impl_->worker = std::thread([this] { impl_->io.run(); });
}

PacketListener::~PacketListener() { stop(); }

void PacketListener::stop() {
    if (!impl_ || !impl_->worker.joinable()) return;
    impl_->io.stop();
    impl_->worker.join();
}

std::uint16_t PacketListener::port() const { return impl_->boundPort; }
TransportKind PacketListener::kind() const { return impl_->kind; }
const std::shared_ptr<ArrivalQueue>& PacketListener::queue() const { return impl_->queue; }

std::unique_ptr<PacketListener> transport_listen(TransportKind kind, std::uint16_t port,
                                                 const std::string& bindAddress) {
    return std::make_unique<PacketListener>(kind, port, std::make_shared<ArrivalQueue>(), bindAddress);
}

struct PacketSender::Impl {
    TransportKind kind;
    asio::io_context io;
    std::optional<tcp::socket> tcpSocket;
    std::optional<udp::socket> udpSocket;
    udp::endpoint target;
    std::vector<std::uint8_t> buffer;
};

PacketSender::PacketSender(TransportKind kind, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>()) {
    impl_->kind = kind;
    try {
        if (kind == TransportKind::stream) {
            tcp::resolver resolver(impl_->io);
            impl_->tcpSocket.emplace(impl_->io);
            asio::connect(*impl_->tcpSocket, resolver.resolve(host, std::to_string(port)));
            impl_->tcpSocket->set_option(tcp::no_delay(true));
        } else {
            udp::resolver resolver(impl_->io);
            impl_->target = *resolver.resolve(udp::v4(), host, std::to_string(port)).begin();
            impl_->udpSocket.emplace(impl_->io, udp::v4());
        }
    } catch (const boost::system::system_error& e) {
        throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + e.what());
    }
}

PacketSender::~PacketSender() = default;

void PacketSender::send(std::span<const std::uint8_t> packet) {
    try {
        if (impl_->kind == TransportKind::stream) {
            auto& buf = impl_->buffer;
            buf.clear();
            const auto n = static_cast<std::uint32_t>(packet.size());
            for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
            buf.insert(buf.end(), packet.begin(), packet.end());
            asio::write(*impl_->tcpSocket, asio::buffer(buf));
        } else {
            impl_->udpSocket->send_to(asio::buffer(packet.data(), packet.size()), impl_->target);
        }
    } catch (const boost::system::system_error& e) {
        throw IoError(std::string("send failed: ") + e.what());
    }
}

}  // namespace wiresens
