#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "diode/segmentation.hpp"

namespace diode {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;

struct ReassemblyConfig {
    std::chrono::milliseconds stale_after{30'000};
    std::chrono::milliseconds sweep_interval{5'000};
    std::size_t max_entries = 10'000;

    bool operator==(const ReassemblyConfig&) const = default;
};

struct ReassembledPayload {
    Uuid uuid;
    Bytes payload;
};

struct ReassemblyStats {
    std::uint64_t released = 0;
    std::uint64_t checksum_failures = 0;
    std::uint64_t inconsistent = 0;
    std::uint64_t dropped_full = 0;
    std::uint64_t expired = 0;
    std::uint64_t duplicates = 0;
};

struct ExpiredEntry {
    Uuid uuid;
    std::size_t segments_held = 0;
    std::chrono::milliseconds age{0};
};

// Collects decoded packets per uuid, deduplicates and reorders by index, and
// releases the reconstructed payload once the header plus all count indexes
// are present and the checksum matches. Insert and sweep are serialized on an
// internal mutex (receive loop + timer thread).
class ReassemblyBuffer {
  public:
    explicit ReassemblyBuffer(ReassemblyConfig cfg = {}) : cfg_(cfg) {}

    // Returns the payload on the insert that completes a message. Throws
    // ChecksumMismatch / InconsistentMessage / BufferFull; in every error case
    // the offending entry or packet has already been dropped.
    std::optional<ReassembledPayload> insert(const Packet& packet, TimePoint now = Clock::now());

    // Drops incomplete entries idle longer than stale_after and returns them
    // so the caller can log one line each.
    std::vector<ExpiredEntry> sweep(TimePoint now = Clock::now());

    ReassemblyStats stats() const;
    std::size_t entry_count() const;

  private:
    struct Entry {
        std::optional<SegmentHeader> header;
        std::map<std::uint32_t, Bytes> segments;  // keyed by index: dedup + ordering
        std::optional<std::uint32_t> count;
        TimePoint last_activity{};
        bool completed = false;  // re-opened by late duplicates, expired by sweep
    };

    Bytes finish_locked(const Uuid& uuid, Entry& entry);

    ReassemblyConfig cfg_;
    mutable std::mutex mu_;
    std::map<Uuid, Entry> entries_;
    ReassemblyStats stats_;
};

}  // namespace diode
