/*
 * Copyright (c) the reusedb authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstring>
#include <map>
#include <span>
#include <vector>

#include "reusedb/common.hpp"

namespace reusedb {

enum class HtKind : uint8_t {
    JoinBuild,       // multi-map from join key to build-side tuples
    Aggregate,       // group key -> fixed-width aggregate states
    SharedGrouping,  // group key -> individual tuples (shared aggregation phase)
};

inline const char* ht_kind_name(HtKind k) {
    switch (k) {
        case HtKind::JoinBuild: return "join-build";
        case HtKind::Aggregate: return "aggregate";
        default: return "shared-grouping";
    }
}

/// Extendible-hashing hash table over fixed-width entries with linked-list
/// collision chains. Resizing doubles only the bucket directory; chain entries
/// move to their new buckets lazily on first touch. Optionally each entry
/// carries a query-id tag word for shared plans.
///
/// Entry node layout: [hash u64][next u32][tag u64?][key bytes][payload bytes].
/// htSize counts 8 bytes per directory slot plus one node per entry and stays
/// consistent with recount_bytes() after every mutation.
class ReusableHashTable {
  public:
    static constexpr uint32_t kNil = UINT32_MAX;
    static constexpr double kMaxLoadFactor = 0.75;  // average chain occupancy

    ReusableHashTable(HtKind kind, uint32_t key_bytes, uint32_t payload_bytes, bool tagged = false,
                      uint32_t initial_depth = 3)
        : kind_(kind), key_bytes_(key_bytes), payload_bytes_(payload_bytes), tagged_(tagged) {
        header_bytes_ = 12 + (tagged_ ? 8 : 0);
        node_bytes_ = header_bytes_ + key_bytes_ + payload_bytes_;
        node_bytes_ = (node_bytes_ + 7u) & ~7u;
        global_depth_ = initial_depth;
        dir_.assign(size_t(1) << global_depth_, 0);
        buckets_.push_back(Bucket{kNil, 0});
        ht_size_ = dir_.size() * 8;
    }

    HtKind kind() const { return kind_; }
    bool tagged() const { return tagged_; }
    uint32_t key_bytes() const { return key_bytes_; }
    uint32_t payload_bytes() const { return payload_bytes_; }
    /// Width of the stored tuple (key + payload), the cost model's tWidth.
    uint32_t tuple_width() const { return key_bytes_ + payload_bytes_; }
    uint32_t node_bytes() const { return node_bytes_; }
    size_t entry_count() const { return entries_; }
    size_t ht_size_bytes() const { return ht_size_; }
    uint32_t global_depth() const { return global_depth_; }
    size_t directory_size() const { return dir_.size(); }

    void insert(std::span<const uint8_t> key, std::span<const uint8_t> payload, uint64_t tag = 0) {
        check_widths(key, payload);
        uint64_t h = hash_bytes(key.data(), key.size());
        size_t slot = h & slot_mask();
        settle(slot);
        uint32_t node = new_node(h, key, payload, tag);
        Bucket& b = buckets_[dir_[slot]];
        set_next(node, b.head);
        b.head = node;
        entries_++;
        ht_size_ += node_bytes_;
        maybe_grow();
    }

    /// Visits every entry whose key matches. fn(payload mutable ptr, tag ptr or
    /// nullptr). Pointers are valid only during the call.
    template <typename Fn>
    void for_each_match(std::span<const uint8_t> key, Fn&& fn) {
        if (entries_ == 0) return;
        uint64_t h = hash_bytes(key.data(), key.size());
        size_t slot = h & slot_mask();
        settle(slot);
        uint32_t n = buckets_[dir_[slot]].head;
        while (n != kNil) {
            uint8_t* p = node_ptr(n);
            uint32_t next = get_next(p);
            if (read_hash(p) == h && key_equal(p, key)) {
                fn(p + header_bytes_ + key_bytes_, tagged_ ? reinterpret_cast<uint64_t*>(p + 12) : nullptr);
            }
            n = next;
        }
    }

    bool contains(std::span<const uint8_t> key) {
        bool found = false;
        for_each_match(key, [&](uint8_t*, uint64_t*) { found = true; });
        return found;
    }

    /// Aggregate-state upsert: when the key is absent, `init` fills the new
    /// state and the call counts as an insert (returns true); otherwise `fold`
    /// updates the existing state in place (returns false).
    template <typename InitFn, typename FoldFn>
    bool update_aggregate(std::span<const uint8_t> key, InitFn&& init, FoldFn&& fold, uint64_t tag = 0) {
        if (kind_ != HtKind::Aggregate) throw LayoutError("update_aggregate on non-aggregate hash table");
        if (key.size() != key_bytes_) throw LayoutError("aggregate key width mismatch");
        uint64_t h = hash_bytes(key.data(), key.size());
        size_t slot = h & slot_mask();
        settle(slot);
        uint32_t n = buckets_[dir_[slot]].head;
        while (n != kNil) {
            uint8_t* p = node_ptr(n);
            if (read_hash(p) == h && key_equal(p, key)) {
                fold(p + header_bytes_ + key_bytes_);
                if (tagged_) {
                    uint64_t* t = reinterpret_cast<uint64_t*>(p + 12);
                    *t |= tag;
                }
                return false;
            }
            n = get_next(p);
        }
        uint32_t node = new_node(h, key, {}, tag);
        init(node_ptr(node) + header_bytes_ + key_bytes_);
        Bucket& b = buckets_[dir_[slot]];
        set_next(node, b.head);
        b.head = node;
        entries_++;
        ht_size_ += node_bytes_;
        maybe_grow();
        return true;
    }

    /// Doubles the directory until the target entry count fits under the load
    /// factor. Entries are redistributed lazily afterwards.
    void resize(size_t target_entries) {
        while (double(target_entries) > kMaxLoadFactor * double(dir_.size())) double_directory();
    }

    /// Visits all entries in insertion order: fn(key ptr, payload ptr, tag).
    template <typename Fn>
    void scan_entries(Fn&& fn) const {
        for (size_t i = 0; i < entries_; ++i) {
            const uint8_t* p = arena_.data() + i * node_bytes_;
            uint64_t tag = 0;
            if (tagged_) std::memcpy(&tag, p + 12, 8);
            fn(p + header_bytes_, p + header_bytes_ + key_bytes_, tag);
        }
    }

    /// Recomputes every entry's tag word; returns the number of entries
    /// visited. fn(key ptr, payload ptr) -> uint64 tag.
    template <typename Fn>
    size_t retag(Fn&& fn) {
        if (!tagged_) throw LayoutError("retag on untagged hash table");
        for (size_t i = 0; i < entries_; ++i) {
            uint8_t* p = arena_.data() + i * node_bytes_;
            uint64_t tag = fn(p + header_bytes_, p + header_bytes_ + key_bytes_);
            std::memcpy(p + 12, &tag, 8);
        }
        return entries_;
    }

    /// Audit: htSize recomputed from the ground truth.
    size_t recount_bytes() const {
        size_t chained = 0;
        for (const Bucket& b : buckets_) {
            uint32_t n = b.head;
            while (n != kNil) {
                chained++;
                n = get_next(arena_.data() + size_t(n) * node_bytes_);
            }
        }
        if (chained != entries_) throw EngineError("hash table entry count drifted");
        return dir_.size() * 8 + chained * node_bytes_;
    }

    std::map<size_t, size_t> chain_length_histogram() const {
        std::map<size_t, size_t> hist;
        for (const Bucket& b : buckets_) {
            size_t len = 0;
            uint32_t n = b.head;
            while (n != kNil) {
                len++;
                n = get_next(arena_.data() + size_t(n) * node_bytes_);
            }
            hist[len]++;
        }
        return hist;
    }

    std::string debug_dump() const {
        std::string s = "kind=" + std::string(ht_kind_name(kind_)) + " depth=" + std::to_string(global_depth_) +
                        " entries=" + std::to_string(entries_) + " htSize=" + std::to_string(ht_size_) +
                        " tWidth=" + std::to_string(tuple_width()) + " chains=";
        for (auto& [len, cnt] : chain_length_histogram()) {
            s += std::to_string(len) + ":" + std::to_string(cnt) + " ";
        }
        return s;
    }

  private:
    struct Bucket {
        uint32_t head = kNil;
        uint8_t local_depth = 0;
    };

    void check_widths(std::span<const uint8_t> key, std::span<const uint8_t> payload) const {
        if (key.size() != key_bytes_ || payload.size() != payload_bytes_)
            throw LayoutError("entry width mismatch (key " + std::to_string(key.size()) + "/" +
                              std::to_string(key_bytes_) + ", payload " + std::to_string(payload.size()) + "/" +
                              std::to_string(payload_bytes_) + ")");
    }

    size_t slot_mask() const { return dir_.size() - 1; }

    bool key_equal(const uint8_t* node, std::span<const uint8_t> key) const {
        return key_bytes_ == 0 || std::memcmp(node + header_bytes_, key.data(), key_bytes_) == 0;
    }

    uint8_t* node_ptr(uint32_t id) { return arena_.data() + size_t(id) * node_bytes_; }

    static uint64_t read_hash(const uint8_t* p) {
        uint64_t h;
        std::memcpy(&h, p, 8);
        return h;
    }

    static uint32_t get_next(const uint8_t* p) {
        uint32_t n;
        std::memcpy(&n, p + 8, 4);
        return n;
    }

    void set_next(uint32_t id, uint32_t next) { std::memcpy(node_ptr(id) + 8, &next, 4); }

    uint32_t new_node(uint64_t h, std::span<const uint8_t> key, std::span<const uint8_t> payload, uint64_t tag) {
        size_t at = arena_.size();
        arena_.resize(at + node_bytes_);
        uint8_t* p = arena_.data() + at;
        std::memcpy(p, &h, 8);
        uint32_t nil = kNil;
        std::memcpy(p + 8, &nil, 4);
        if (tagged_) std::memcpy(p + 12, &tag, 8);
        if (key_bytes_) std::memcpy(p + header_bytes_, key.data(), key_bytes_);
        if (!payload.empty()) std::memcpy(p + header_bytes_ + key_bytes_, payload.data(), payload_bytes_);
        else std::memset(p + header_bytes_ + key_bytes_, 0, payload_bytes_);
        return uint32_t(at / node_bytes_);
    }

    void maybe_grow() {
        if (double(entries_) > kMaxLoadFactor * double(dir_.size())) double_directory();
    }

    void double_directory() {
        size_t old = dir_.size();
        dir_.resize(old * 2);
        for (size_t i = 0; i < old; ++i) dir_[old + i] = dir_[i];
        global_depth_++;
        ht_size_ += old * 8;
    }

    /// Lazily splits the bucket behind `slot` until its local depth matches the
    /// global depth, redistributing chained entries by their hash bits.
    void settle(size_t slot) {
        while (buckets_[dir_[slot]].local_depth < global_depth_) {
            uint32_t bid = dir_[slot];
            uint8_t ld = buckets_[bid].local_depth;
            uint32_t nid = uint32_t(buckets_.size());
            buckets_.push_back(Bucket{kNil, uint8_t(ld + 1)});
            buckets_[bid].local_depth = uint8_t(ld + 1);

            // Slots aliasing this bucket share the low `ld` bits; the bit at
            // position ld decides which half keeps it.
            size_t base = slot & ((size_t(1) << ld) - 1);
            size_t stride = size_t(1) << ld;
            for (size_t j = base; j < dir_.size(); j += stride) {
                if (dir_[j] == bid && ((j >> ld) & 1)) dir_[j] = nid;
            }

            uint32_t n = buckets_[bid].head;
            buckets_[bid].head = kNil;
            uint32_t keep_head = kNil, move_head = kNil;
            while (n != kNil) {
                uint8_t* p = node_ptr(n);
                uint32_t next = get_next(p);
                if ((read_hash(p) >> ld) & 1) {
                    set_next(n, move_head);
                    move_head = n;
                } else {
                    set_next(n, keep_head);
                    keep_head = n;
                }
                n = next;
            }
            buckets_[bid].head = keep_head;
            buckets_[nid].head = move_head;
        }
    }

    HtKind kind_;
    uint32_t key_bytes_;
    uint32_t payload_bytes_;
    bool tagged_;
    uint32_t header_bytes_ = 12;
    uint32_t node_bytes_ = 0;
    uint32_t global_depth_ = 0;
    std::vector<uint32_t> dir_;
    std::vector<Bucket> buckets_;
    std::vector<uint8_t> arena_;
    size_t entries_ = 0;
    size_t ht_size_ = 0;
};

}  // namespace reusedb
