#include "diode/bridge.hpp"

#include <iostream>

#include "diode/envelope.hpp"
#include "diode/errors.hpp"

namespace diode {

void BridgeConfig::finalize() {
    skip_exchanges.insert(kDefaultExchange);
    skip_exchanges.insert("amq.direct");
    skip_exchanges.insert("amq.fanout");
    skip_exchanges.insert("amq.headers");
    skip_exchanges.insert("amq.match");
    skip_exchanges.insert("amq.topic");
    skip_exchanges.insert(encrypt_exchange);
    if (skip_exchanges.contains(encrypted_exchange))
        throw ParseError("the '" + encrypted_exchange + "' exchange must be mirrored");
}

BlackPipeline::BlackPipeline(Broker& broker, BridgeConfig cfg, PacketSink sink)
    : broker_(broker), cfg_(std::move(cfg)), sink_(std::move(sink)) {
    cfg_.finalize();
    poller_ = std::make_unique<MirrorPoller>(
        broker_, cfg_.skip_exchanges, cfg_.poll_interval,
        [this](const std::string& origin, const Message& msg) { on_message(origin, msg); });
}

BlackPipeline::~BlackPipeline() { stop(); }

void BlackPipeline::start() { poller_->start(); }
void BlackPipeline::stop() { poller_->stop(); }
void BlackPipeline::poll_once() { poller_->poll_once(); }

void BlackPipeline::on_message(const std::string& origin, const Message& msg) {
    stats_.messages_in.fetch_add(1);
    try {
        auto spec = broker_.exchange_spec(origin);  // live spec at consume time
        if (!spec) throw NoSuchExchange("origin exchange vanished: " + origin);
        Bytes serialized = serialize_exchange_message({*spec, msg}, cfg_.compress);
        auto [header, segments] = cut(serialized, cfg_.cutter);
        auto packets = replicate_and_shuffle(header, segments, cfg_.cutter);
        {
            std::lock_guard lock(send_mu_);
            for (const auto& p : packets) sink_(p);
        }
        stats_.packets.fetch_add(packets.size());
        stats_.messages_out.fetch_add(1);
    } catch (const std::exception& e) {
        stats_.errors.fetch_add(1);
        std::cerr << "black: message from '" << origin << "' skipped: " << e.what() << "\n";
    }
}

EncryptListener::EncryptListener(Broker& broker, BridgeConfig cfg, KeyMaterial keys)
    : broker_(broker), cfg_(std::move(cfg)), keys_(std::move(keys)) {
    cfg_.finalize();
}

void EncryptListener::start() {
    broker_.declare_exchange({ExchangeKind::fanout, cfg_.encrypt_exchange});
    broker_.declare_exchange({ExchangeKind::fanout, cfg_.encrypted_exchange});
    broker_.declare_queue(cfg_.encrypt_exchange);
    broker_.declare_queue(cfg_.encrypt_exchange + ".dead");
    broker_.bind(cfg_.encrypt_exchange, cfg_.encrypt_exchange);
    broker_.consume(cfg_.encrypt_exchange, [this](const Message& msg) { return handle(msg); });
}

bool EncryptListener::handle(const Message& msg) {
    auto origin_it = msg.properties.headers.find(kOriginHeader);
    std::optional<ExchangeSpec> spec;
    if (origin_it != msg.properties.headers.end())
        spec = broker_.exchange_spec(origin_it->second);
    if (!spec) {
        broker_.enqueue(cfg_.encrypt_exchange + ".dead", msg);
        dead_lettered_.fetch_add(1);
        std::cerr << "encrypt: message without usable origin dead-lettered\n";
        return true;
    }

    Message inner = msg;
    inner.properties.headers.erase(kOriginHeader);
    inner.properties.received_exchange = spec->name;
    Bytes plaintext = serialize_exchange_message({*spec, inner}, false);
    SecureMessage sm =
        encrypt_and_sign(plaintext, index_.fetch_add(1) + 1, keys_, cfg_.crypto);

    Message out;
    out.body = to_bytes(secure_message_to_json(sm));
    out.properties.routing_key = msg.properties.routing_key;
    out.properties.content_type = "application/json";
    broker_.publish(cfg_.encrypted_exchange, std::move(out));
    encrypted_.fetch_add(1);
    return true;
}

RedPipeline::RedPipeline(Broker& broker, BridgeConfig cfg, std::optional<KeyMaterial> keys)
    : broker_(broker), cfg_(std::move(cfg)), keys_(std::move(keys)),
      buffer_(cfg_.reassembly) {
    cfg_.finalize();
}

RedPipeline::~RedPipeline() { stop(); }

void RedPipeline::start() {
    if (keys_) {
        broker_.declare_exchange({ExchangeKind::fanout, cfg_.encrypted_exchange});
        broker_.declare_queue(cfg_.encrypted_exchange);
        broker_.bind(cfg_.encrypted_exchange, cfg_.encrypted_exchange);
        broker_.consume(cfg_.encrypted_exchange,
                        [this](const Message& msg) { return decrypt_handle(msg); });
    }
    if (running_.exchange(true)) return;
    sweeper_ = std::thread([this] {
        while (running_) {
            {
                std::unique_lock lock(cv_mu_);
                cv_.wait_for(lock, cfg_.reassembly.sweep_interval,
                             [this] { return !running_.load(); });
            }
            if (!running_) break;
            for (const auto& e : buffer_.sweep()) {
                std::cerr << "red: discarded incomplete message " << to_string(e.uuid) << " ("
                          << e.segments_held << " segments, idle " << e.age.count() << " ms)\n";
            }
        }
    });
}

void RedPipeline::stop() {
    if (!running_.exchange(false)) return;
    cv_.notify_all();
    if (sweeper_.joinable()) sweeper_.join();
}

void RedPipeline::handle_datagram(ByteView datagram) {
    std::optional<ReassembledPayload> payload;
    try {
        Packet packet = decode_packet(datagram);
        payload = buffer_.insert(packet);
    } catch (const ChecksumMismatch& e) {
        checksum_failures_.fetch_add(1);
        std::cerr << "red: " << e.what() << "\n";
        return;
    } catch (const DiodeError&) {
        decode_errors_.fetch_add(1);
        return;
    }
    if (!payload) return;

    stats_.messages_in.fetch_add(1);
    try {
        republish(deserialize_exchange_message(payload->payload));
    } catch (const std::exception& e) {
        stats_.errors.fetch_add(1);
        std::cerr << "red: reconstructed message dropped: " << e.what() << "\n";
    }
}

void RedPipeline::republish(const ExchangeMessage& em) {
    broker_.declare_exchange(em.exchange);
    broker_.publish(em.exchange.name, em.message);
    stats_.messages_out.fetch_add(1);
}

bool RedPipeline::decrypt_handle(const Message& msg) {
    if (!keys_) return true;
    try {
        SecureMessage sm = secure_message_from_json(to_string(msg.body));
        std::uint64_t last = last_index_.exchange(sm.index);
        if (last != 0 && sm.index != last + 1) {
            index_warnings_.fetch_add(1);
            std::cerr << "red: secure message index gap: expected " << (last + 1) << ", got "
                      << sm.index << "\n";
        }
        Bytes plaintext = verify_and_decrypt(sm, *keys_, cfg_.crypto);
        ExchangeMessage inner = deserialize_exchange_message(plaintext);
        if (inner.exchange.name == cfg_.encrypted_exchange)
            throw MalformedEnvelope("decrypted message routed back to the encrypted exchange");
        republish(inner);
    } catch (const std::exception& e) {
        crypto_failures_.fetch_add(1);
        std::cerr << "red: encrypted message dropped: " << e.what() << "\n";
    }
    return true;
}

}  // namespace diode
