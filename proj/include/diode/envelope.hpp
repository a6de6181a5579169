#pragma once

#include <map>
#include <string>

#include "diode/bytes.hpp"

namespace diode {

enum class ExchangeKind { fanout, direct, topic, headers };

std::string to_string(ExchangeKind kind);
ExchangeKind exchange_kind_from_string(const std::string& s);

struct MessageProperties {
    std::string routing_key;
    std::map<std::string, std::string> headers;
    std::string content_type;
    std::string received_exchange;

    bool operator==(const MessageProperties&) const = default;
};

struct Message {
    Bytes body;
    MessageProperties properties;

    bool operator==(const Message&) const = default;
};

struct ExchangeSpec {
    ExchangeKind kind = ExchangeKind::fanout;
    std::string name;
    bool durable = true;
    bool auto_delete = false;
    std::map<std::string, std::string> arguments;

    bool operator==(const ExchangeSpec&) const = default;
};

// Transit wrapper: carries the exchange metadata needed to recreate the
// originating exchange on the receiving side.
struct ExchangeMessage {
    ExchangeSpec exchange;
    Message message;

    bool operator==(const ExchangeMessage&) const = default;
};

// Wire form: 1 flag byte (bit 0 = compressed) followed by the canonical JSON
// encoding, deflated when the flag is set. Deterministic for a given input.
Bytes serialize_exchange_message(const ExchangeMessage& em, bool compress);

// Inverse of serialize_exchange_message. Throws MalformedEnvelope on any
// corruption that slipped past the segment checksum.
ExchangeMessage deserialize_exchange_message(ByteView bytes);

// zlib-format DEFLATE helpers (also used for envelope bodies in tests).
Bytes deflate_bytes(ByteView data);
Bytes inflate_bytes(ByteView data);

}  // namespace diode
