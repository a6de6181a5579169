#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diode/bytes.hpp"

namespace diode {

// Token bucket; burst = 1 degenerates to fixed inter-packet pacing.
class RateLimiter {
  public:
    explicit RateLimiter(double rate_pps = 14500.0, int burst = 1);

    // Blocks until a token is available.
    void acquire();
    double rate() const { return rate_; }

  private:
    double rate_;
    std::chrono::nanoseconds interval_;
    std::chrono::nanoseconds credit_;  // burst / rate
    std::chrono::steady_clock::time_point next_;
};

class UdpSender {
  public:
    UdpSender(const std::string& host, std::uint16_t port, std::size_t mtu = 8192);
    ~UdpSender();
    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;

    // Fire and forget; throws OversizedPacket, counts socket errors as drops.
    void send_packet(ByteView packet);

    std::uint64_t sent() const { return sent_.load(); }
    std::uint64_t dropped() const { return dropped_.load(); }

  private:
    int fd_ = -1;
    std::size_t mtu_;
    std::atomic<std::uint64_t> sent_{0};
    std::atomic<std::uint64_t> dropped_{0};
};

// Sends the whole stream with inter-packet pacing; returns packets written.
std::size_t send_stream(const std::vector<Bytes>& packets, RateLimiter& limiter, UdpSender& sink);

class UdpReceiver {
  public:
    // Throws BindError when the endpoint cannot be bound. Port 0 picks a free
    // port, readable via port().
    UdpReceiver(const std::string& host, std::uint16_t port);
    ~UdpReceiver();
    UdpReceiver(const UdpReceiver&) = delete;
    UdpReceiver& operator=(const UdpReceiver&) = delete;

    std::uint16_t port() const { return port_; }

    // Hands every datagram (malformed ones included) to the handler in
    // arrival order; returns after stop().
    void run(const std::function<void(Bytes)>& handler);
    void stop();

    std::uint64_t received() const { return received_.load(); }

  private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> received_{0};
};

// In-process stand-in for the physical diode: i.i.d. loss and duplication,
// bounded random reordering. Deterministic per seed.
struct ChannelModel {
    double loss_probability = 0.0;
    double duplicate_probability = 0.0;
    std::size_t reorder_window = 0;
    std::uint64_t seed = 0;
};

std::vector<Bytes> simulate_channel(const std::vector<Bytes>& in, const ChannelModel& model);

}  // namespace diode
