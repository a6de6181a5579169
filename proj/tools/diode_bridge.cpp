// diode-bridge: black/red daemons, key generation, demo sensor, bench.
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "diode/bridge.hpp"
#include "diode/config.hpp"
#include "diode/envelope.hpp"
#include "diode/errors.hpp"
#include "diode/sensor.hpp"
#include "diode/transport.hpp"

using namespace diode;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
    struct sigaction sa{};
    sa.sa_handler = on_signal;
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DiodeError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DiodeError("cannot write " + path.string());
    out << text;
}

BridgeConfig load_config(const std::string& path) {
    BridgeConfig cfg = path.empty() ? BridgeConfig{} : parse_config_file(path);
    cfg.finalize();
    return cfg;
}

// black holds its own private signing key and the red side's public wrap key
KeyMaterial load_black_keys(const fs::path& dir) {
    KeyMaterial keys;
    keys.sender_signing = AsymKey::from_pem(read_file(dir / "black_private.pem"));
    keys.receiver_wrap = AsymKey::from_pem(read_file(dir / "red_public.pem"));
    return keys;
}

KeyMaterial load_red_keys(const fs::path& dir) {
    KeyMaterial keys;
    keys.sender_signing = AsymKey::from_pem(read_file(dir / "black_public.pem"));
    keys.receiver_wrap = AsymKey::from_pem(read_file(dir / "red_private.pem"));
    return keys;
}

void print_metrics(const char* side, const Broker& broker, const PipelineStats& stats,
                   std::uint64_t packets_net, std::uint64_t dropped, std::uint64_t rejected) {
    auto snap = broker.snapshot();
    std::ostringstream line;
    line << "METRICS side=" << side;
    line << " messages_in=" << stats.messages_in.load()
         << " messages_out=" << stats.messages_out.load() << " packets=" << packets_net
         << " dropped=" << dropped << " rejected=" << rejected
         << " errors=" << stats.errors.load();
    for (const auto& [name, io] : snap.exchanges) {
        if (io.in == 0 && io.out == 0) continue;
        line << " exchange." << name << "=" << io.in << "/" << io.out;
    }
    for (const auto& [name, depth] : snap.queue_depths) {
        if (depth == 0) continue;
        line << " queue." << name << "=" << depth;
    }
    std::cerr << line.str() << "\n";
}

int run_black(const std::string& config_path, int sensor_period_ms, int metrics_interval_s) {
    BridgeConfig cfg = load_config(config_path);
    if (sensor_period_ms > 0 && cfg.crypto_enabled)
        cfg.skip_exchanges.insert("sensor");  // only the encrypted copies cross the diode
    Broker broker;

    UdpSender sender(cfg.target_host, cfg.target_port, cfg.mtu);
    RateLimiter limiter(cfg.rate, cfg.burst);
    BlackPipeline pipeline(broker, cfg, [&](const Bytes& p) {
        limiter.acquire();
        sender.send_packet(p);
    });

    std::optional<EncryptListener> encryptor;
    if (cfg.crypto_enabled) {
        if (cfg.key_dir.empty()) {
            std::cerr << "black: crypto enabled but no key directory configured\n";
            return 1;
        }
        encryptor.emplace(broker, cfg, load_black_keys(cfg.key_dir));
        encryptor->start();
    }

    std::optional<SensorGenerator> sensor;
    if (sensor_period_ms > 0) {
        sensor.emplace(broker, std::chrono::milliseconds(sensor_period_ms));
        if (cfg.crypto_enabled) {
            // route the sensor feed through the encrypting path
            broker.declare_queue("sensor.encrypt");
            broker.bind("sensor", "sensor.encrypt");
            broker.add_shovel("sensor.encrypt", broker, cfg.encrypt_exchange);
        }
    }

    pipeline.start();
    if (sensor) sensor->start();
    std::cerr << "black: target " << cfg.target_host << ":" << cfg.target_port << ", rate "
              << cfg.rate << " pkt/s, redundancy " << cfg.cutter.redundancy_factor << ", crypto "
              << (cfg.crypto_enabled ? "on" : "off") << "\n";

    auto last_metrics = std::chrono::steady_clock::now();
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (std::chrono::steady_clock::now() - last_metrics >=
            std::chrono::seconds(metrics_interval_s)) {
            print_metrics("black", broker, pipeline.stats(), sender.sent(), sender.dropped(), 0);
            last_metrics = std::chrono::steady_clock::now();
        }
    }

    std::cerr << "black: draining\n";
    if (sensor) sensor->stop();
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    bool busy = true;
    while (busy && std::chrono::steady_clock::now() < deadline) {
        busy = false;
        for (const auto& [name, depth] : broker.snapshot().queue_depths) busy |= depth > 0;
        if (busy) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    broker.stop();
    pipeline.stop();
    print_metrics("black", broker, pipeline.stats(), sender.sent(), sender.dropped(), 0);
    return 0;
}

int run_red(const std::string& config_path, int metrics_interval_s) {
    BridgeConfig cfg = load_config(config_path);
    Broker broker;

    std::optional<KeyMaterial> keys;
    if (cfg.crypto_enabled) {
        if (cfg.key_dir.empty()) {
            std::cerr << "red: crypto enabled but no key directory configured\n";
            return 1;
        }
        try {
            keys = load_red_keys(cfg.key_dir);
        } catch (const std::exception& e) {
            std::cerr << "red: " << e.what() << "\n";
            return 1;
        }
    }

    RedPipeline pipeline(broker, cfg, keys);

    // console view of the demo sensor feed, with index gap warnings
    broker.declare_exchange({ExchangeKind::fanout, "sensor"});
    broker.declare_queue("sensor.view");
    broker.bind("sensor", "sensor.view");
    auto detector = std::make_shared<MissingIndexDetector>();
    broker.consume("sensor.view", [detector](const Message& msg) {
        std::string body = to_string(msg.body);
        std::cerr << "sensorEvent: " << body << "\n";
        try {
            SensorEvent ev = sensor_event_from_json(body);
            if (auto gap = detector->observe(ev.index))
                std::cerr << "WARNING missing index: expected " << gap->expected << ", got "
                          << gap->observed << "\n";
        } catch (const DiodeError&) {
        }
        return true;
    });

    std::unique_ptr<UdpReceiver> receiver;
    try {
        receiver = std::make_unique<UdpReceiver>(cfg.listen_host, cfg.listen_port);
    } catch (const std::exception& e) {
        std::cerr << "red: " << e.what() << "\n";
        return 1;
    }
    pipeline.start();
    std::cerr << "red: listening on " << cfg.listen_host << ":" << receiver->port() << ", crypto "
              << (cfg.crypto_enabled ? "on" : "off") << "\n";

    std::thread rx_thread([&] {
        receiver->run([&](Bytes datagram) { pipeline.handle_datagram(datagram); });
    });
    auto last_metrics = std::chrono::steady_clock::now();
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (std::chrono::steady_clock::now() - last_metrics >=
            std::chrono::seconds(metrics_interval_s)) {
            print_metrics("red", broker, pipeline.stats(), receiver->received(), 0,
                          pipeline.checksum_failures() + pipeline.decode_errors() +
                              pipeline.crypto_failures());
            last_metrics = std::chrono::steady_clock::now();
        }
    }

    std::cerr << "red: draining\n";
    receiver->stop();
    rx_thread.join();
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    bool busy = true;
    while (busy && std::chrono::steady_clock::now() < deadline) {
        busy = false;
        for (const auto& [name, depth] : broker.snapshot().queue_depths) busy |= depth > 0;
        if (busy) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    broker.stop();
    pipeline.stop();
    print_metrics("red", broker, pipeline.stats(), receiver->received(), 0,
                  pipeline.checksum_failures() + pipeline.decode_errors() +
                      pipeline.crypto_failures());
    return 0;
}

int run_keygen(const std::string& dir, int bits, bool force) {
    fs::create_directories(dir);
    const char* names[] = {"black_private.pem", "black_public.pem", "red_private.pem",
                           "red_public.pem"};
    if (!force) {
        for (const char* name : names) {
            if (fs::exists(fs::path(dir) / name)) {
                std::cerr << "keygen: " << name << " exists, use --force to overwrite\n";
                return 1;
            }
        }
    }
    CryptoConfig cfg;
    cfg.asym_keysize = bits;
    cfg.validate();
    AsymKey black = AsymKey::generate(bits);
    AsymKey red = AsymKey::generate(bits);
    write_file(fs::path(dir) / "black_private.pem", black.private_pem());
    write_file(fs::path(dir) / "black_public.pem", black.public_pem());
    write_file(fs::path(dir) / "red_private.pem", red.private_pem());
    write_file(fs::path(dir) / "red_public.pem", red.public_pem());

    // self test with the freshly written files
    KeyMaterial sender = load_black_keys(dir);
    KeyMaterial receiver = load_red_keys(dir);
    SecureMessage sm = encrypt_and_sign(to_bytes("self test"), 1, sender, cfg);
    if (verify_and_decrypt(sm, receiver, cfg) != to_bytes("self test")) {
        std::cerr << "keygen: self test failed\n";
        return 1;
    }
    std::cerr << "keygen: wrote 4 PEM files (" << bits << " bit) to " << dir << "\n";
    return 0;
}

int run_bench(const std::string& config_path, double rate, std::size_t size, int seconds) {
    BridgeConfig cfg = load_config(config_path);
    UdpReceiver receiver("127.0.0.1", 0);
    std::thread rx_thread([&] { receiver.run([](Bytes) {}); });
    UdpSender sender("127.0.0.1", receiver.port(), std::max(cfg.mtu, size));
    RateLimiter limiter(rate, std::max(1, static_cast<int>(rate / 20)));
    Bytes packet(size, 0x5A);

    auto t0 = std::chrono::steady_clock::now();
    auto end = t0 + std::chrono::seconds(seconds);
    while (!g_stop && std::chrono::steady_clock::now() < end) {
        limiter.acquire();
        sender.send_packet(packet);
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    receiver.stop();
    rx_thread.join();

    double pps = static_cast<double>(sender.sent()) / elapsed;
    double mib = pps * static_cast<double>(size) / 1024.0 / 1024.0;
    std::cerr << "METRICS side=bench sent=" << sender.sent() << " received="
              << receiver.received() << " elapsed=" << elapsed << " pps=" << pps
              << " mib_per_s=" << mib << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-way UDP broker mirror"};
    app.require_subcommand(1);
    install_signal_handlers();

    std::string config_path;
    int metrics_interval = 5;
    int sensor_period = 0;

    auto* black = app.add_subcommand("black", "run the sending side");
    black->add_option("--config", config_path, "properties file");
    black->add_option("--sensor-period", sensor_period,
                      "emit demo sensor events every N ms (0 = off)");
    black->add_option("--metrics-interval", metrics_interval, "metrics period in seconds");

    auto* red = app.add_subcommand("red", "run the receiving side");
    red->add_option("--config", config_path, "properties file");
    red->add_option("--metrics-interval", metrics_interval, "metrics period in seconds");

    std::string key_dir = "keys";
    int key_bits = 2048;
    bool force = false;
    auto* keygen = app.add_subcommand("keygen", "generate the four PEM key files");
    keygen->add_option("--dir", key_dir, "output directory");
    keygen->add_option("--bits", key_bits, "RSA modulus size");
    keygen->add_flag("--force", force, "overwrite existing key files");

    int period_ms = 1000;
    auto* sensor = app.add_subcommand("sensor", "sending side with the demo sensor enabled");
    sensor->add_option("--period", period_ms, "event period in ms")->required();
    sensor->add_option("--config", config_path, "properties file");
    sensor->add_option("--metrics-interval", metrics_interval, "metrics period in seconds");

    double bench_rate = 14500.0;
    std::size_t bench_size = 8192;
    int bench_seconds = 10;
    auto* bench = app.add_subcommand("bench", "loopback throughput measurement");
    bench->add_option("--rate", bench_rate, "packets per second");
    bench->add_option("--size", bench_size, "datagram size in bytes");
    bench->add_option("--seconds", bench_seconds, "duration");
    bench->add_option("--config", config_path, "properties file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (black->parsed()) return run_black(config_path, sensor_period, metrics_interval);
        if (red->parsed()) return run_red(config_path, metrics_interval);
        if (keygen->parsed()) return run_keygen(key_dir, key_bits, force);
        if (sensor->parsed()) return run_black(config_path, period_ms, metrics_interval);
        if (bench->parsed()) return run_bench(config_path, bench_rate, bench_size, bench_seconds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
