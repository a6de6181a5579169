#include <algorithm>

#include "diode/errors.hpp"
#include "diode/reassembly.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace diode;

namespace {

struct Fixture {
    Bytes payload;
    SegmentHeader header;
    std::vector<Segment> segments;
    std::vector<Packet> packets;  // header first, then data in index order

    explicit Fixture(std::size_t len = 250, std::uint32_t seg_size = 100, std::uint64_t seed = 10) {
        std::mt19937_64 rng(seed);
        payload = diode::testing::random_bytes(rng, len);
        CutterConfig cfg;
        cfg.segment_size = seg_size;
        std::tie(header, segments) = cut(payload, cfg, Uuid{seed, seed + 1});
        packets.emplace_back(header);
        for (const auto& s : segments) packets.emplace_back(s);
    }
};

}  // namespace

TEST_CASE("all 24 arrival orders of header + 3 segments release on the last insert") {
    Fixture fx;
    REQUIRE(fx.packets.size() == 4);
    std::vector<std::size_t> order = {0, 1, 2, 3};
    do {
        ReassemblyBuffer buf;
        for (std::size_t i = 0; i < order.size(); ++i) {
            auto result = buf.insert(fx.packets[order[i]]);
            if (i + 1 < order.size()) {
                CHECK(!result);
            } else {
                REQUIRE(result);
                CHECK(result->payload == fx.payload);
            }
        }
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("redundant duplicates release exactly once") {
    Fixture fx;
    ReassemblyBuffer buf;
    int released = 0;
    // every packet twice, interleaved and also fully repeated after completion
    std::vector<std::size_t> arrivals = {0, 0, 1, 2, 1, 3, 2, 3, 0, 1, 2, 3};
    for (auto i : arrivals) {
        if (auto r = buf.insert(fx.packets[i])) {
            ++released;
            CHECK(r->payload == fx.payload);
        }
    }
    CHECK(released == 1);
    CHECK(buf.stats().released == 1);
}

TEST_CASE("order independence over random supersets with duplicates") {
    Fixture fx(1000, 64, 77);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<std::size_t> arrivals;
        for (std::size_t i = 0; i < fx.packets.size(); ++i) {
            std::size_t copies = 1 + rng() % 3;
            for (std::size_t c = 0; c < copies; ++c) arrivals.push_back(i);
        }
        std::shuffle(arrivals.begin(), arrivals.end(), rng);
        ReassemblyBuffer buf;
        int released = 0;
        for (auto i : arrivals) {
            if (auto r = buf.insert(fx.packets[i])) {
                ++released;
                CHECK(r->payload == fx.payload);
            }
        }
        CHECK(released == 1);
    }
}

TEST_CASE("corrupted segment payload fails the checksum and drops the entry") {
    Fixture fx;
    ReassemblyBuffer buf;
    Segment bad = fx.segments[1];
    bad.payload[0] ^= 0x01;
    CHECK(!buf.insert(fx.header));
    CHECK(!buf.insert(fx.segments[0]));
    CHECK(!buf.insert(bad));
    CHECK_THROWS_AS(buf.insert(fx.segments[2]), ChecksumMismatch);
    CHECK(buf.entry_count() == 0);
    CHECK(buf.stats().checksum_failures == 1);

    // the same uuid can start over afterwards
    for (const auto& p : fx.packets) {
        if (auto r = buf.insert(p)) CHECK(r->payload == fx.payload);
    }
    CHECK(buf.stats().released == 1);
}

TEST_CASE("conflicting counts drop the entry") {
    Fixture fx;
    ReassemblyBuffer buf;
    CHECK(!buf.insert(fx.segments[0]));
    Segment liar = fx.segments[1];
    liar.count = 99;
    CHECK_THROWS_AS(buf.insert(liar), InconsistentMessage);
    CHECK(buf.entry_count() == 0);
}

TEST_CASE("segment index out of range is inconsistent") {
    Fixture fx;
    ReassemblyBuffer buf;
    Segment bad = fx.segments[0];
    bad.index = bad.count + 5;
    CHECK_THROWS_AS(buf.insert(bad), InconsistentMessage);
}

TEST_CASE("buffer full drops the newest uuid") {
    ReassemblyConfig cfg;
    cfg.max_entries = 2;
    ReassemblyBuffer buf(cfg);
    Fixture a(100, 64, 1), b(100, 64, 2), c(100, 64, 3);
    CHECK(!buf.insert(a.packets[1]));
    CHECK(!buf.insert(b.packets[1]));
    CHECK_THROWS_AS(buf.insert(c.packets[1]), BufferFull);
    CHECK(buf.stats().dropped_full == 1);
}

TEST_CASE("sweep expires only entries idle past stale_after") {
    ReassemblyConfig cfg;
    cfg.stale_after = std::chrono::seconds(30);
    ReassemblyBuffer buf(cfg);
    TimePoint t0 = Clock::now();

    SUBCASE("idle 31 s -> expired, uuid reported") {
        Fixture fx;
        buf.insert(fx.packets[1], t0);
        auto expired = buf.sweep(t0 + std::chrono::seconds(31));
        REQUIRE(expired.size() == 1);
        CHECK(expired[0].uuid == fx.header.uuid);
        CHECK(expired[0].segments_held == 1);
        CHECK(buf.entry_count() == 0);
    }
    SUBCASE("idle 29 s -> retained") {
        Fixture fx;
        buf.insert(fx.packets[1], t0);
        CHECK(buf.sweep(t0 + std::chrono::seconds(29)).empty());
        CHECK(buf.entry_count() == 1);
    }
    SUBCASE("a duplicate arrival refreshes the expiry clock") {
        Fixture fx;
        buf.insert(fx.packets[1], t0);
        buf.insert(fx.packets[1], t0 + std::chrono::seconds(25));  // duplicate counts as activity
        CHECK(buf.sweep(t0 + std::chrono::seconds(31)).empty());
        CHECK(buf.entry_count() == 1);
        auto expired = buf.sweep(t0 + std::chrono::seconds(56));
        CHECK(expired.size() == 1);
    }
    SUBCASE("after sweep every remaining entry is within stale_after") {
        Fixture a(100, 64, 1), b(100, 64, 2);
        buf.insert(a.packets[1], t0);
        buf.insert(b.packets[1], t0 + std::chrono::seconds(20));
        buf.sweep(t0 + std::chrono::seconds(40));
        CHECK(buf.entry_count() == 1);
    }
}

TEST_CASE("total_length is authoritative over the last segment") {
    // header claims fewer bytes than the segments carry: payload is truncated
    Fixture fx(200, 100, 5);
    SegmentHeader trimmed = fx.header;
    trimmed.total_length = 150;
    Bytes expect(fx.payload.begin(), fx.payload.begin() + 150);
    trimmed.checksum = checksum(expect);
    ReassemblyBuffer buf;
    buf.insert(trimmed);
    buf.insert(fx.segments[0]);
    auto r = buf.insert(fx.segments[1]);
    REQUIRE(r);
    CHECK(r->payload == expect);
}
