#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include "diode/broker.hpp"
#include "diode/crypto.hpp"
#include "diode/reassembly.hpp"
#include "diode/segmentation.hpp"
#include "diode/transport.hpp"

namespace diode {

struct BridgeConfig {
    CutterConfig cutter;
    double rate = 14500.0;
    int burst = 1;
    std::size_t mtu = 8192;
    bool compress = false;

    bool crypto_enabled = false;
    CryptoConfig crypto;
    std::string key_dir;  // PEM files for the CLI daemons

    std::set<std::string> skip_exchanges;  // defaults + "encrypt" added by finalize()
    std::string encrypt_exchange = "encrypt";
    std::string encrypted_exchange = "encrypted";
    std::chrono::milliseconds poll_interval{1000};

    ReassemblyConfig reassembly;

    std::string listen_host = "0.0.0.0";
    std::uint16_t listen_port = 1234;
    std::string target_host = "127.0.0.1";
    std::uint16_t target_port = 1234;

    // Fills skip_exchanges with the default amq.* exchanges plus
    // encrypt_exchange and checks the skip invariants.
    void finalize();

    bool operator==(const BridgeConfig&) const = default;
};

using PacketSink = std::function<void(const Bytes&)>;

struct PipelineStats {
    std::atomic<std::uint64_t> messages_in{0};
    std::atomic<std::uint64_t> messages_out{0};
    std::atomic<std::uint64_t> packets{0};
    std::atomic<std::uint64_t> errors{0};
};

// Black side: mirror-poll -> wrap in ExchangeMessage -> serialize (optionally
// compressed) -> cut -> replicate/shuffle -> sink. A bad message is logged
// and skipped, never halts the pipeline.
class BlackPipeline {
  public:
    BlackPipeline(Broker& broker, BridgeConfig cfg, PacketSink sink);
    ~BlackPipeline();

    void start();
    void stop();
    void poll_once();  // single mirror pass, for tests

    const PipelineStats& stats() const { return stats_; }

  private:
    void on_message(const std::string& origin, const Message& msg);

    Broker& broker_;
    BridgeConfig cfg_;
    PacketSink sink_;
    std::unique_ptr<MirrorPoller> poller_;
    std::mutex send_mu_;
    PipelineStats stats_;
};

// Consumes the "encrypt" exchange, encrypts + signs each message and
// republishes the SecureMessage JSON to the "encrypted" exchange.
class EncryptListener {
  public:
    EncryptListener(Broker& broker, BridgeConfig cfg, KeyMaterial keys);

    void start();

    std::uint64_t encrypted() const { return encrypted_.load(); }
    std::uint64_t dead_lettered() const { return dead_lettered_.load(); }

  private:
    bool handle(const Message& msg);

    Broker& broker_;
    BridgeConfig cfg_;
    KeyMaterial keys_;
    std::atomic<std::uint64_t> index_{0};
    std::atomic<std::uint64_t> encrypted_{0};
    std::atomic<std::uint64_t> dead_lettered_{0};
};

// Red side: datagram -> decode -> reassemble -> deserialize -> declare
// exchange -> republish; plus the decrypt listener on the "encrypted"
// exchange. Feed datagrams via handle_datagram (the UDP receiver or a test
// harness calls it).
class RedPipeline {
  public:
    RedPipeline(Broker& broker, BridgeConfig cfg, std::optional<KeyMaterial> keys = std::nullopt);
    ~RedPipeline();

    void start();  // attaches the decrypt listener, starts the sweep timer
    void stop();

    void handle_datagram(ByteView datagram);

    const PipelineStats& stats() const { return stats_; }
    const ReassemblyBuffer& buffer() const { return buffer_; }
    std::uint64_t decode_errors() const { return decode_errors_.load(); }
    std::uint64_t checksum_failures() const { return checksum_failures_.load(); }
    std::uint64_t crypto_failures() const { return crypto_failures_.load(); }
    std::uint64_t index_warnings() const { return index_warnings_.load(); }

  private:
    bool decrypt_handle(const Message& msg);
    void republish(const ExchangeMessage& em);

    Broker& broker_;
    BridgeConfig cfg_;
    std::optional<KeyMaterial> keys_;
    ReassemblyBuffer buffer_;
    std::atomic<std::uint64_t> decode_errors_{0};
    std::atomic<std::uint64_t> checksum_failures_{0};
    std::atomic<std::uint64_t> crypto_failures_{0};
    std::atomic<std::uint64_t> index_warnings_{0};
    std::atomic<std::uint64_t> last_index_{0};
    PipelineStats stats_;
    std::thread sweeper_;
    std::atomic<bool> running_{false};
    std::condition_variable cv_;
    std::mutex cv_mu_;
};

}  // namespace diode
