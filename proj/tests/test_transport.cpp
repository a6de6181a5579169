#include <map>
#include <thread>

#include "diode/errors.hpp"
#include "diode/transport.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace diode;

TEST_CASE("rate limiter paces n packets over (n-1)/rate seconds") {
    // 100 pps, burst 1: 11 acquires should take close to 100 ms.
    RateLimiter limiter(100.0, 1);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 11; ++i) limiter.acquire();
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(elapsed >= 0.09);
    CHECK(elapsed < 0.5);
}

TEST_CASE("burst capacity lets the first packets through instantly") {
    RateLimiter limiter(10.0, 5);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 5; ++i) limiter.acquire();
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(elapsed < 0.05);
}

TEST_CASE("throughput arithmetic for the default rate") {
    // 14500 packets/s of 8192-byte datagrams is about 113 MiB/s.
    double mib_per_s = 14500.0 * 8192.0 / 1024.0 / 1024.0;
    CHECK(mib_per_s == doctest::Approx(113.28).epsilon(0.01));
}

TEST_CASE("udp loopback delivers datagrams in order") {
    UdpReceiver rx("127.0.0.1", 0);
    REQUIRE(rx.port() != 0);
    std::vector<Bytes> got;
    std::thread rx_thread([&] { rx.run([&](Bytes d) { got.push_back(std::move(d)); }); });

    UdpSender tx("127.0.0.1", rx.port());
    std::vector<Bytes> sent = {to_bytes("one"), to_bytes("two"), Bytes{}};  // incl. zero-length
    for (const auto& p : sent) tx.send_packet(p);
    CHECK(tx.sent() == 3);
    CHECK(tx.dropped() == 0);

    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (rx.received() < 3 && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    rx.stop();
    rx_thread.join();
    REQUIRE(got.size() == 3);
    CHECK(got == sent);
}

TEST_CASE("send_stream pushes every packet through the limiter") {
    UdpReceiver rx("127.0.0.1", 0);
    std::thread rx_thread([&] { rx.run([](Bytes) {}); });
    UdpSender tx("127.0.0.1", rx.port());
    RateLimiter limiter(10000.0, 1);
    std::vector<Bytes> packets(50, to_bytes("payload"));
    CHECK(send_stream(packets, limiter, tx) == 50);
    CHECK(tx.sent() == 50);
    rx.stop();
    rx_thread.join();
}

TEST_CASE("oversized datagrams are refused before the socket") {
    UdpSender tx("127.0.0.1", 9, 64);
    CHECK_THROWS_AS(tx.send_packet(Bytes(65, 0x00)), OversizedPacket);
    tx.send_packet(Bytes(64, 0x00));
    CHECK(tx.sent() == 1);
}

TEST_CASE("binding the same port twice fails") {
    UdpReceiver first("127.0.0.1", 0);
    CHECK_THROWS_AS(UdpReceiver("127.0.0.1", first.port()), BindError);
}

TEST_CASE("channel model") {
    std::vector<Bytes> in;
    for (int i = 0; i < 1000; ++i) in.push_back(to_bytes(std::to_string(i)));

    SUBCASE("all-zero model is the identity") {
        CHECK(simulate_channel(in, {}) == in);
    }
    SUBCASE("loss 1.0 drops everything") {
        CHECK(simulate_channel(in, {1.0, 0.0, 0, 1}).empty());
    }
    SUBCASE("same seed reproduces, different seed diverges") {
        ChannelModel m{0.3, 0.2, 8, 42};
        CHECK(simulate_channel(in, m) == simulate_channel(in, m));
        ChannelModel other = m;
        other.seed = 43;
        CHECK(simulate_channel(in, m) != simulate_channel(in, other));
    }
    SUBCASE("survivor count is binomial within 3 sigma") {
        // n=1000, p_keep=0.9: mean 900, sigma ~9.5
        auto out = simulate_channel(in, {0.1, 0.0, 0, 7});
        double sigma = std::sqrt(1000 * 0.1 * 0.9);
        CHECK(std::abs(static_cast<double>(out.size()) - 900.0) <= 3.0 * sigma);
    }
    SUBCASE("duplication only ever adds copies of real packets") {
        auto out = simulate_channel(in, {0.0, 0.3, 0, 9});
        CHECK(out.size() > in.size());
        std::map<Bytes, int> counts;
        for (const auto& p : out) ++counts[p];
        CHECK(counts.size() == in.size());  // nothing lost, nothing invented
        for (const auto& [p, n] : counts) CHECK(n >= 1);
    }
    SUBCASE("reordering is bounded by the window") {
        std::size_t window = 4;
        auto out = simulate_channel(in, {0.0, 0.0, window, 5});
        REQUIRE(out.size() == in.size());
        CHECK(out != in);  // reordering actually happened
        for (std::size_t pos = 0; pos < out.size(); ++pos) {
            std::size_t orig = std::stoul(to_string(out[pos]));
            CHECK(std::abs(static_cast<long>(pos) - static_cast<long>(orig)) <=
                  static_cast<long>(window));
        }
    }
}
