#include "diode/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <random>
#include <thread>

#include "diode/errors.hpp"

namespace diode {

namespace {

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw SocketError("bad IPv4 address: " + host);
    return addr;
}

}  // namespace

RateLimiter::RateLimiter(double rate_pps, int burst) : rate_(rate_pps) {
    if (rate_pps <= 0) throw DiodeError("rate must be positive");
    using namespace std::chrono;
    interval_ = duration_cast<nanoseconds>(duration<double>(1.0 / rate_pps));
    credit_ = interval_ * std::max(burst, 1);
    next_ = steady_clock::now() - credit_;
}

void RateLimiter::acquire() {
    using namespace std::chrono;
    // Virtual schedule: every acquire advances next_ by one interval, so
    // sleep overshoot is repaid on later packets instead of accumulating.
    auto now = steady_clock::now();
    next_ = std::max(next_ + interval_, now - credit_);
    // Sleeping short is fine: the next sleep aims at an absolute time, so the
    // overshoot is repaid as long as it stays within the burst credit.
    if (next_ > now) std::this_thread::sleep_for(next_ - now);
}

UdpSender::UdpSender(const std::string& host, std::uint16_t port, std::size_t mtu) : mtu_(mtu) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw SocketError("socket() failed");
    sockaddr_in addr = make_addr(host, port);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw SocketError("connect() failed");
    }
    int sndbuf = 4 * 1024 * 1024;
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &sndbuf, sizeof(sndbuf));
}

UdpSender::~UdpSender() {
    if (fd_ >= 0) ::close(fd_);
}

void UdpSender::send_packet(ByteView packet) {
    if (packet.size() > mtu_)
        throw OversizedPacket("packet of " + std::to_string(packet.size()) + " bytes exceeds MTU");
    ssize_t n = ::send(fd_, packet.data(), packet.size(), 0);
    if (n < 0) {
        // fire and forget: count the drop, never retry
        dropped_.fetch_add(1);
        return;
    }
    sent_.fetch_add(1);
}

std::size_t send_stream(const std::vector<Bytes>& packets, RateLimiter& limiter, UdpSender& sink) {
    std::uint64_t before = sink.sent();
    for (const auto& p : packets) {
        limiter.acquire();
        sink.send_packet(p);
    }
    return static_cast<std::size_t>(sink.sent() - before);
}

UdpReceiver::UdpReceiver(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw BindError("socket() failed");
    int rcvbuf = 8 * 1024 * 1024;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));
    sockaddr_in addr = make_addr(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw BindError("bind() failed: " + std::string(std::strerror(errno)));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    timeval tv{0, 100'000};  // poll the stop flag every 100 ms
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

UdpReceiver::~UdpReceiver() {
    stop();
    if (fd_ >= 0) ::close(fd_);
}

void UdpReceiver::run(const std::function<void(Bytes)>& handler) {
    std::vector<std::uint8_t> buf(65536);
    while (!stopping_) {
        ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
            break;
        }
        received_.fetch_add(1);
        handler(Bytes(buf.begin(), buf.begin() + n));
    }
}

void UdpReceiver::stop() { stopping_ = true; }

std::vector<Bytes> simulate_channel(const std::vector<Bytes>& in, const ChannelModel& model) {
    std::mt19937_64 rng(model.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    // survivors (with duplicates) tagged with a jittered position
    std::vector<std::pair<std::size_t, const Bytes*>> keyed;
    keyed.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (coin(rng) < model.loss_probability) continue;
        int copies = 1 + (coin(rng) < model.duplicate_probability ? 1 : 0);
        for (int c = 0; c < copies; ++c) {
            std::size_t displacement =
                model.reorder_window == 0
                    ? 0
                    : std::uniform_int_distribution<std::size_t>(0, model.reorder_window)(rng);
            keyed.emplace_back(i + displacement, &in[i]);
        }
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Bytes> out;
    out.reserve(keyed.size());
    for (const auto& [key, p] : keyed) out.push_back(*p);
    return out;
}

}  // namespace diode
