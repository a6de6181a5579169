#include "diode/envelope.hpp"

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "diode/errors.hpp"

namespace diode {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint8_t kFlagCompressed = 0x01;

}  // namespace

std::string to_string(ExchangeKind kind) {
    switch (kind) {
        case ExchangeKind::fanout: return "fanout";
        case ExchangeKind::direct: return "direct";
        case ExchangeKind::topic: return "topic";
        case ExchangeKind::headers: return "headers";
    }
    throw MalformedEnvelope("unknown exchange kind");
}

ExchangeKind exchange_kind_from_string(const std::string& s) {
    if (s == "fanout") return ExchangeKind::fanout;
    if (s == "direct") return ExchangeKind::direct;
    if (s == "topic") return ExchangeKind::topic;
    if (s == "headers") return ExchangeKind::headers;
    throw MalformedEnvelope("unknown exchange kind: " + s);
}

Bytes deflate_bytes(ByteView data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    Bytes out(bound);
    int rc = compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()),
                       Z_BEST_COMPRESSION);
    if (rc != Z_OK) throw MalformedEnvelope("deflate failed");
    out.resize(bound);
    return out;
}

Bytes inflate_bytes(ByteView data) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw MalformedEnvelope("inflate init failed");
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    Bytes out;
    std::uint8_t chunk[16384];
    int rc = Z_OK;
    do {
        zs.next_out = chunk;
        zs.avail_out = sizeof(chunk);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw MalformedEnvelope("inflate failed");
        }
        out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw MalformedEnvelope("inflate: truncated stream");
    return out;
}

Bytes serialize_exchange_message(const ExchangeMessage& em, bool compress) {
    ordered_json j;
    j["exchange"] = {
        {"kind", to_string(em.exchange.kind)},
        {"name", em.exchange.name},
        {"durable", em.exchange.durable},
        {"auto_delete", em.exchange.auto_delete},
        {"arguments", em.exchange.arguments},
    };
    j["message"] = {
        {"body", base64_encode(em.message.body)},
        {"properties",
         {
             {"routing_key", em.message.properties.routing_key},
             {"headers", em.message.properties.headers},
             {"content_type", em.message.properties.content_type},
             {"received_exchange", em.message.properties.received_exchange},
         }},
    };
    std::string text = j.dump();
    ByteView json_bytes(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());

    Bytes out;
    out.push_back(compress ? kFlagCompressed : 0x00);
    if (compress) {
        Bytes deflated = deflate_bytes(json_bytes);
        out.insert(out.end(), deflated.begin(), deflated.end());
    } else {
        out.insert(out.end(), json_bytes.begin(), json_bytes.end());
    }
    return out;
}

ExchangeMessage deserialize_exchange_message(ByteView bytes) {
    if (bytes.empty()) throw MalformedEnvelope("envelope: empty input");
    std::uint8_t flags = bytes[0];
    if (flags & ~kFlagCompressed) throw MalformedEnvelope("envelope: bad flag byte");
    ByteView rest = bytes.subspan(1);

    Bytes inflated;
    if (flags & kFlagCompressed) {
        inflated = inflate_bytes(rest);
        rest = inflated;
    }

    ordered_json j = ordered_json::parse(rest.begin(), rest.end(), nullptr, false);
    if (j.is_discarded()) throw MalformedEnvelope("envelope: JSON parse failure");

    try {
        ExchangeMessage em;
        const auto& ex = j.at("exchange");
        em.exchange.kind = exchange_kind_from_string(ex.at("kind").get<std::string>());
        em.exchange.name = ex.at("name").get<std::string>();
        em.exchange.durable = ex.at("durable").get<bool>();
        em.exchange.auto_delete = ex.at("auto_delete").get<bool>();
        em.exchange.arguments = ex.at("arguments").get<std::map<std::string, std::string>>();

        const auto& msg = j.at("message");
        em.message.body = base64_decode(msg.at("body").get<std::string>());
        const auto& props = msg.at("properties");
        em.message.properties.routing_key = props.at("routing_key").get<std::string>();
        em.message.properties.headers =
            props.at("headers").get<std::map<std::string, std::string>>();
        em.message.properties.content_type = props.at("content_type").get<std::string>();
        em.message.properties.received_exchange =
            props.at("received_exchange").get<std::string>();
        return em;
    } catch (const ordered_json::exception& e) {
        throw MalformedEnvelope(std::string("envelope: ") + e.what());
    }
}

}  // namespace diode
