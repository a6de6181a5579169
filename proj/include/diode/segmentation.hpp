#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "diode/bytes.hpp"

namespace diode {

inline constexpr std::uint8_t kHeaderPacketTag = 0x01;
inline constexpr std::uint8_t kDataPacketTag = 0x02;
inline constexpr std::size_t kDataPacketOverhead = 29;  // tag + uuid + count + index + length
inline constexpr std::size_t kHeaderPacketSize = 61;    // tag + uuid + count + total_length + checksum

struct Uuid {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    auto operator<=>(const Uuid&) const = default;
};

Uuid random_uuid();
std::string to_string(const Uuid& u);

using Digest = std::array<std::uint8_t, 32>;

struct Segment {
    Uuid uuid;
    std::uint32_t count = 0;
    std::uint32_t index = 0;
    Bytes payload;

    bool operator==(const Segment&) const = default;
};

struct SegmentHeader {
    Uuid uuid;
    std::uint32_t count = 0;
    std::uint64_t total_length = 0;
    Digest checksum{};

    bool operator==(const SegmentHeader&) const = default;
};

using Packet = std::variant<SegmentHeader, Segment>;

struct CutterConfig {
    std::uint32_t segment_size = 8163;  // MTU 8192 minus the 29-byte data header
    std::uint32_t redundancy_factor = 2;
    std::optional<std::uint64_t> shuffle_seed;

    bool operator==(const CutterConfig&) const = default;
};

// SHA-256 of payload.
Digest checksum(ByteView payload);
std::string to_hex(const Digest& d);

// Splits payload into count = max(1, ceil(len/segment_size)) segments plus a
// header carrying total length and checksum. Throws PayloadTooLarge when the
// segment count would not fit the count field.
std::pair<SegmentHeader, std::vector<Segment>> cut(ByteView payload, const CutterConfig& cfg);
std::pair<SegmentHeader, std::vector<Segment>> cut(ByteView payload, const CutterConfig& cfg,
                                                   const Uuid& uuid);

// Fixed big-endian layouts; data packets are 29 + payload bytes, header
// packets exactly 61 bytes.
Bytes encode_packet(const Segment& s);
Bytes encode_packet(const SegmentHeader& h);
Bytes encode_packet(const Packet& p);

// Dispatches on the first byte. Throws UnknownPacketType, TruncatedPacket or
// LengthMismatch on corrupt or foreign datagrams.
Packet decode_packet(ByteView bytes);

// redundancy_factor copies of every packet (header included), Fisher-Yates
// shuffled; deterministic when cfg.shuffle_seed is set.
std::vector<Bytes> replicate_and_shuffle(const SegmentHeader& header,
                                         const std::vector<Segment>& segments,
                                         const CutterConfig& cfg);

}  // namespace diode
