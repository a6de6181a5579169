#include "diode/segmentation.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <random>

#include "diode/errors.hpp"

namespace diode {

Uuid random_uuid() {
    std::uint8_t buf[16];
    if (RAND_bytes(buf, sizeof(buf)) != 1) throw DiodeError("uuid: RNG failure");
    Uuid u;
    for (int i = 0; i < 8; ++i) u.hi = (u.hi << 8) | buf[i];
    for (int i = 8; i < 16; ++i) u.lo = (u.lo << 8) | buf[i];
    return u;
}

std::string to_string(const Uuid& u) {
    char buf[36];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(u.hi),
                  static_cast<unsigned long long>(u.lo));
    return std::string(buf, 32);
}

Digest checksum(ByteView payload) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(payload.data(), payload.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw DiodeError("sha256 failure");
    }
    return out;
}

std::string to_hex(const Digest& d) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : d) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xF]);
    }
    return out;
}

std::pair<SegmentHeader, std::vector<Segment>> cut(ByteView payload, const CutterConfig& cfg) {
    return cut(payload, cfg, random_uuid());
}

std::pair<SegmentHeader, std::vector<Segment>> cut(ByteView payload, const CutterConfig& cfg,
                                                   const Uuid& uuid) {
    if (cfg.segment_size == 0) throw DiodeError("cutter: segment_size must be >= 1");
    const std::size_t size = cfg.segment_size;
    const std::size_t len = payload.size();
    const std::uint64_t count64 = len == 0 ? 1 : (len + size - 1) / size;
    if (count64 > 0xFFFFFFFFull) throw PayloadTooLarge("cutter: segment count exceeds 2^32-1");
    const auto count = static_cast<std::uint32_t>(count64);

    SegmentHeader header;
    header.uuid = uuid;
    header.count = count;
    header.total_length = len;
    header.checksum = checksum(payload);

    std::vector<Segment> segments;
    segments.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::size_t begin = std::size_t{i} * size;
        std::size_t end = std::min(begin + size, len);
        Segment s;
        s.uuid = uuid;
        s.count = count;
        s.index = i;
        s.payload.assign(payload.begin() + begin, payload.begin() + end);
        segments.push_back(std::move(s));
    }
    return {header, std::move(segments)};
}

Bytes encode_packet(const Segment& s) {
    Bytes out;
    out.reserve(kDataPacketOverhead + s.payload.size());
    out.push_back(kDataPacketTag);
    put_u64_be(out, s.uuid.hi);
    put_u64_be(out, s.uuid.lo);
    put_u32_be(out, s.count);
    put_u32_be(out, s.index);
    put_u32_be(out, static_cast<std::uint32_t>(s.payload.size()));
    out.insert(out.end(), s.payload.begin(), s.payload.end());
    return out;
}

Bytes encode_packet(const SegmentHeader& h) {
    Bytes out;
    out.reserve(kHeaderPacketSize);
    out.push_back(kHeaderPacketTag);
    put_u64_be(out, h.uuid.hi);
    put_u64_be(out, h.uuid.lo);
    put_u32_be(out, h.count);
    put_u64_be(out, h.total_length);
    out.insert(out.end(), h.checksum.begin(), h.checksum.end());
    return out;
}

Bytes encode_packet(const Packet& p) {
    return std::visit([](const auto& v) { return encode_packet(v); }, p);
}

Packet decode_packet(ByteView bytes) {
    if (bytes.empty()) throw TruncatedPacket("decode: empty datagram");
    switch (bytes[0]) {
        case kHeaderPacketTag: {
            if (bytes.size() < kHeaderPacketSize)
                throw TruncatedPacket("decode: short header packet");
            if (bytes.size() > kHeaderPacketSize)
                throw LengthMismatch("decode: oversized header packet");
            SegmentHeader h;
            h.uuid.hi = get_u64_be(bytes, 1);
            h.uuid.lo = get_u64_be(bytes, 9);
            h.count = get_u32_be(bytes, 17);
            h.total_length = get_u64_be(bytes, 21);
            std::copy(bytes.begin() + 29, bytes.begin() + 61, h.checksum.begin());
            return h;
        }
        case kDataPacketTag: {
            if (bytes.size() < kDataPacketOverhead)
                throw TruncatedPacket("decode: short data packet");
            Segment s;
            s.uuid.hi = get_u64_be(bytes, 1);
            s.uuid.lo = get_u64_be(bytes, 9);
            s.count = get_u32_be(bytes, 17);
            s.index = get_u32_be(bytes, 21);
            std::uint32_t payload_len = get_u32_be(bytes, 25);
            if (bytes.size() - kDataPacketOverhead != payload_len)
                throw LengthMismatch("decode: payload length field disagrees with datagram size");
            s.payload.assign(bytes.begin() + kDataPacketOverhead, bytes.end());
            return s;
        }
        default:
            throw UnknownPacketType("decode: unknown packet tag");
    }
}

std::vector<Bytes> replicate_and_shuffle(const SegmentHeader& header,
                                         const std::vector<Segment>& segments,
                                         const CutterConfig& cfg) {
    std::vector<Bytes> out;
    out.reserve((segments.size() + 1) * cfg.redundancy_factor);
    for (std::uint32_t r = 0; r < cfg.redundancy_factor; ++r) {
        out.push_back(encode_packet(header));
        for (const auto& s : segments) out.push_back(encode_packet(s));
    }
    std::mt19937_64 rng(cfg.shuffle_seed ? *cfg.shuffle_seed : std::random_device{}());
    for (std::size_t i = out.size(); i > 1; --i) {
        std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        std::swap(out[i - 1], out[j]);
    }
    return out;
}

}  // namespace diode
