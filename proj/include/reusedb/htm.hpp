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

#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include "reusedb/costmodel.hpp"
#include "reusedb/hashtable.hpp"
#include "reusedb/layout.hpp"
#include "reusedb/matcher.hpp"

namespace reusedb {

/// Lineage of a registered hash table: the producing operator subtree, with
/// canonical descriptors at every node.
struct LineagePlan {
    BuildDesc desc;
    std::vector<LineagePlan> children;
};

struct CacheEntry {
    uint64_t id = 0;
    std::shared_ptr<ReusableHashTable> table;
    BuildDesc desc;
    BoxSet content;                   // disjoint boxes the table's tuples satisfy
    std::vector<ColRef> stored_attrs; // payload columns (aggregates: the group keys)
    TupleLayout key_layout;
    TupleLayout payload_layout;       // join-build / shared-grouping payload rows
    uint64_t last_access = 0;
    bool pinned = false;
    bool tagged = false;
    size_t hits = 0;
    size_t tracked_bytes = 0;         // htSize as accounted in the manager total

    CachedDesc cached_desc() const { return CachedDesc{desc, content, stored_attrs}; }
};

struct Candidate {
    uint64_t entry_id = 0;
    ReuseCase reuse_case = ReuseCase::Exact;
    RewriteResult rewrite;
};

inline CandidateGeometry geometry_of(const CacheEntry& e) {
    CandidateGeometry g;
    g.entry_count = double(e.table->entry_count());
    g.ht_bytes = double(e.table->ht_size_bytes());
    g.dir_slots = double(e.table->directory_size());
    g.node_bytes = e.table->node_bytes();
    g.t_width = e.table->tuple_width();
    g.tagged = e.tagged;
    return g;
}

/// Cache of reusable hash tables: lineage recycler graph, usage statistics,
/// the pin/release protocol, and coarse-grained LRU eviction of whole tables.
class HashTableManager {
  public:
    struct GraphNode {
        BuildDesc desc;
        std::vector<std::string> children;  // child signatures
        std::optional<uint64_t> entry_id;   // set iff the node refers to a cached table
    };

    HashTableManager() = default;

    void set_budget(std::optional<size_t> bytes) { budget_ = bytes; }
    std::optional<size_t> budget() const { return budget_; }
    size_t total_bytes() const { return total_bytes_; }
    size_t entry_count() const { return entries_.size(); }
    const std::map<std::string, GraphNode>& graph() const { return graph_; }
    const std::map<uint64_t, CacheEntry>& entries() const { return entries_; }
    const std::vector<uint64_t>& eviction_log() const { return eviction_log_; }
    uint64_t logical_clock() const { return clock_; }

    CacheEntry& entry(uint64_t id) {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw EngineError("unknown cache entry " + std::to_string(id));
        return it->second;
    }

    bool has_entry(uint64_t id) const { return entries_.count(id) > 0; }

    size_t flagged_node_count() const {
        size_t n = 0;
        for (auto& [_, node] : graph_) {
            if (node.entry_id) n++;
        }
        return n;
    }

    /// Admits a freshly built (or mutated-and-rebuilt) hash table. Lineage is
    /// merged into the recycler graph; registering the same lineage again
    /// replaces the previous entry's table. Runs garbage collection first when
    /// the admission would exceed the budget.
    CacheEntry& register_table(std::shared_ptr<ReusableHashTable> ht, const LineagePlan& lineage, BoxSet content,
                               std::vector<ColRef> stored_attrs, TupleLayout key_layout, TupleLayout payload_layout) {
        size_t bytes = ht->ht_size_bytes();
        std::string sig = lineage.desc.signature();
        auto existing = graph_.find(sig);
        size_t replacing = 0;
        if (existing != graph_.end() && existing->second.entry_id && entries_.count(*existing->second.entry_id))
            replacing = entries_.at(*existing->second.entry_id).tracked_bytes;

        if (budget_ && total_bytes_ - replacing + bytes > *budget_) {
            size_t target = *budget_ >= bytes ? *budget_ - bytes : 0;
            evict_until_excluding(target + replacing, existing != graph_.end() && existing->second.entry_id
                                                          ? existing->second.entry_id
                                                          : std::optional<uint64_t>());
        }

        merge_lineage(lineage);
        GraphNode& node = graph_.at(sig);

        uint64_t id;
        if (node.entry_id && entries_.count(*node.entry_id)) {
            id = *node.entry_id;  // replace the table, keep the entry identity
            CacheEntry& e = entries_.at(id);
            total_bytes_ -= e.tracked_bytes;
            e.table = std::move(ht);
            e.content = std::move(content);
            e.stored_attrs = std::move(stored_attrs);
            e.key_layout = std::move(key_layout);
            e.payload_layout = std::move(payload_layout);
            e.tagged = e.table->tagged();
            e.tracked_bytes = e.table->ht_size_bytes();
            e.last_access = ++clock_;
            total_bytes_ += e.tracked_bytes;
            return e;
        }
        id = next_id_++;
        CacheEntry e;
        e.id = id;
        e.table = std::move(ht);
        e.desc = lineage.desc;
        e.content = std::move(content);
        e.stored_attrs = std::move(stored_attrs);
        e.key_layout = std::move(key_layout);
        e.payload_layout = std::move(payload_layout);
        e.tagged = e.table->tagged();
        e.tracked_bytes = bytes;
        e.last_access = ++clock_;
        total_bytes_ += bytes;
        node.entry_id = id;
        auto [it, _] = entries_.emplace(id, std::move(e));
        return it->second;
    }

    /// Candidates for a requesting plan: unpinned entries whose skeleton and
    /// predicate region pass the matcher, with their classified case and
    /// executable rewrite. `shared_only` keeps just tagged tables (shared
    /// operators cannot use untagged ones).
    std::vector<Candidate> get_candidates(const RequestDesc& request, bool shared_only = false) {
        std::vector<Candidate> out;
        for (auto& [id, e] : entries_) {
            if (e.pinned) continue;
            if (shared_only && !e.tagged) continue;
            std::optional<ReuseCase> cls;
            CachedDesc cd = e.cached_desc();
            switch (request.desc.kind) {
                case HtKind::JoinBuild: cls = matcher::classify(request, cd); break;
                case HtKind::Aggregate: cls = matcher::classify_aggregate(request, cd); break;
                case HtKind::SharedGrouping: cls = matcher::classify_grouping(request, cd); break;
            }
            if (!cls) continue;
            auto rw = matcher::rewrite(request, cd, *cls);
            if (!rw) continue;  // disqualified: required attribute not stored
            out.push_back(Candidate{id, *cls, std::move(*rw)});
        }
        return out;
    }

    /// Marks an entry in use by the one query allowed to reuse it and bumps
    /// its LRU timestamp.
    void pin(uint64_t id) {
        CacheEntry& e = entry(id);
        if (e.pinned) throw EntryUnavailable("cache entry " + std::to_string(id) + " already pinned");
        e.pinned = true;
        e.last_access = ++clock_;
        e.hits++;
    }

    void release(uint64_t id) {
        auto it = entries_.find(id);
        if (it == entries_.end()) return;  // evicted after an aborted plan
        if (!it->second.pinned) throw EngineError("release of unpinned entry " + std::to_string(id));
        it->second.pinned = false;
    }

    size_t pinned_count() const {
        size_t n = 0;
        for (auto& [_, e] : entries_) n += e.pinned ? 1 : 0;
        return n;
    }

    /// Partial/overlapping reuse mutates the cached table in place; the owner
    /// re-declares size and content here afterwards.
    void note_mutation(uint64_t id, BoxSet new_content) {
        CacheEntry& e = entry(id);
        total_bytes_ -= e.tracked_bytes;
        e.tracked_bytes = e.table->ht_size_bytes();
        total_bytes_ += e.tracked_bytes;
        e.content = std::move(new_content);
    }

    /// LRU eviction of whole tables until the footprint drops under `budget`.
    std::vector<uint64_t> evict_until(size_t budget) { return evict_until_excluding(budget, std::nullopt); }

    void stats_csv(std::ostream& os) const {
        os << "entry,kind,htSize,hits,last_access,pinned,tagged\n";
        for (auto& [id, e] : entries_) {
            os << id << "," << ht_kind_name(e.desc.kind) << "," << e.tracked_bytes << "," << e.hits << ","
               << e.last_access << "," << (e.pinned ? 1 : 0) << "," << (e.tagged ? 1 : 0) << "\n";
        }
    }

    double hit_ratio() const {
        if (entries_.empty()) return 0.0;
        size_t hits = 0;
        for (auto& [_, e] : entries_) hits += e.hits;
        return double(hits) / double(entries_.size());
    }

    void clear() {
        entries_.clear();
        graph_.clear();
        total_bytes_ = 0;
        eviction_log_.clear();
    }

    /// Deep copy (tables cloned); used by harnesses that probe sub-plans
    /// without disturbing the real cache.
    HashTableManager snapshot() const {
        HashTableManager m = *this;
        for (auto& [_, e] : m.entries_) e.table = std::make_shared<ReusableHashTable>(*e.table);
        return m;
    }

  private:
    std::vector<uint64_t> evict_until_excluding(size_t budget, std::optional<uint64_t> keep) {
        std::vector<uint64_t> evicted;
        while (total_bytes_ > budget) {
            uint64_t victim = 0;
            uint64_t oldest = UINT64_MAX;
            for (auto& [id, e] : entries_) {
                if (e.pinned) continue;
                if (keep && id == *keep) continue;
                if (e.last_access < oldest) {
                    oldest = e.last_access;
                    victim = id;
                }
            }
            if (oldest == UINT64_MAX)
                throw AdmissionRefused("cache over budget and every entry is pinned");
            remove_entry(victim);
            evicted.push_back(victim);
        }
        return evicted;
    }

    void remove_entry(uint64_t id) {
        auto it = entries_.find(id);
        if (it == entries_.end()) return;
        total_bytes_ -= it->second.tracked_bytes;
        std::string sig = it->second.desc.signature();
        auto node = graph_.find(sig);
        if (node != graph_.end()) node->second.entry_id.reset();  // lineage skeleton stays
        eviction_log_.push_back(id);
        entries_.erase(it);
    }

    void merge_lineage(const LineagePlan& plan) {
        std::string sig = plan.desc.signature();
        auto it = graph_.find(sig);
        if (it == graph_.end()) {
            GraphNode node;
            node.desc = plan.desc;
            for (const LineagePlan& c : plan.children) node.children.push_back(c.desc.signature());
            graph_.emplace(sig, std::move(node));
        }
        for (const LineagePlan& c : plan.children) merge_lineage(c);
    }

    std::map<std::string, GraphNode> graph_;
    std::map<uint64_t, CacheEntry> entries_;
    uint64_t clock_ = 0;
    uint64_t next_id_ = 1;
    std::optional<size_t> budget_;
    size_t total_bytes_ = 0;
    std::vector<uint64_t> eviction_log_;
};

}  // namespace reusedb
