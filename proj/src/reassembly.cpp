#include "diode/reassembly.hpp"

#include "diode/errors.hpp"

namespace diode {

std::optional<ReassembledPayload> ReassemblyBuffer::insert(const Packet& packet, TimePoint now) {
    std::lock_guard lock(mu_);

    const Uuid uuid = std::visit([](const auto& p) { return p.uuid; }, packet);
    auto it = entries_.find(uuid);
    if (it == entries_.end()) {
        if (entries_.size() >= cfg_.max_entries) {
            ++stats_.dropped_full;
            throw BufferFull("reassembly: max_entries reached, packet dropped");
        }
        it = entries_.emplace(uuid, Entry{}).first;
    }
    Entry& entry = it->second;
    entry.last_activity = now;  // any arrival, duplicates included, refreshes the clock

    if (entry.completed) {
        // Late duplicate of a finished message; the tombstone expires via sweep.
        ++stats_.duplicates;
        return std::nullopt;
    }

    if (const auto* header = std::get_if<SegmentHeader>(&packet)) {
        if (entry.header) {
            if (*entry.header == *header) {
                ++stats_.duplicates;
            } else {
                entries_.erase(it);
                ++stats_.inconsistent;
                throw InconsistentMessage("reassembly: conflicting headers for one uuid");
            }
        } else {
            if (entry.count && *entry.count != header->count) {
                entries_.erase(it);
                ++stats_.inconsistent;
                throw InconsistentMessage("reassembly: header count disagrees with segments");
            }
            entry.header = *header;
            entry.count = header->count;
        }
    } else {
        const auto& seg = std::get<Segment>(packet);
        if (entry.count && *entry.count != seg.count) {
            entries_.erase(it);
            ++stats_.inconsistent;
            throw InconsistentMessage("reassembly: segment count disagrees with entry");
        }
        entry.count = seg.count;
        if (seg.index >= seg.count) {
            entries_.erase(it);
            ++stats_.inconsistent;
            throw InconsistentMessage("reassembly: segment index out of range");
        }
        auto [seg_it, inserted] = entry.segments.try_emplace(seg.index, seg.payload);
        (void)seg_it;
        if (!inserted) ++stats_.duplicates;
    }

    if (entry.header && entry.segments.size() == entry.header->count) {
        Bytes payload = finish_locked(uuid, entry);
        ++stats_.released;
        return ReassembledPayload{uuid, std::move(payload)};
    }
    return std::nullopt;
}

Bytes ReassemblyBuffer::finish_locked(const Uuid& uuid, Entry& entry) {
    Bytes payload;
    payload.reserve(entry.header->total_length);
    for (auto& [index, bytes] : entry.segments) {
        payload.insert(payload.end(), bytes.begin(), bytes.end());
    }
    if (payload.size() < entry.header->total_length) {
        entries_.erase(uuid);
        ++stats_.inconsistent;
        throw InconsistentMessage("reassembly: accumulated bytes shorter than total_length");
    }
    payload.resize(entry.header->total_length);  // total_length is authoritative

    if (checksum(payload) != entry.header->checksum) {
        entries_.erase(uuid);
        ++stats_.checksum_failures;
        throw ChecksumMismatch("reassembly: checksum mismatch, message dropped");
    }

    // Keep a tombstone so redundant copies of this message cannot release it
    // twice; it ages out with the normal sweep.
    entry.completed = true;
    entry.segments.clear();
    entry.header.reset();
    return payload;
}

std::vector<ExpiredEntry> ReassemblyBuffer::sweep(TimePoint now) {
    std::lock_guard lock(mu_);
    std::vector<ExpiredEntry> expired;
    for (auto it = entries_.begin(); it != entries_.end();) {
        const Entry& e = it->second;
        if (now - e.last_activity > cfg_.stale_after) {
            if (!e.completed) {
                expired.push_back({it->first, e.segments.size(),
                                   std::chrono::duration_cast<std::chrono::milliseconds>(
                                       now - e.last_activity)});
                ++stats_.expired;
            }
            it = entries_.erase(it);
        } else {
            ++it;
        }
    }
    return expired;
}

ReassemblyStats ReassemblyBuffer::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

std::size_t ReassemblyBuffer::entry_count() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

}  // namespace diode
