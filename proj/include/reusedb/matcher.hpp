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

#include <optional>

#include "reusedb/query.hpp"

namespace reusedb {

/// The four ways a cached hash table can serve a requesting operator, tested
/// in this order. Exact needs nothing, Subsuming post-filters false positives,
/// Partial adds missing tuples from the base tables, Overlapping does both.
enum class ReuseCase : uint8_t { Exact, Subsuming, Partial, Overlapping };

inline const char* reuse_case_name(ReuseCase c) {
    switch (c) {
        case ReuseCase::Exact: return "exact";
        case ReuseCase::Subsuming: return "subsuming";
        case ReuseCase::Partial: return "partial";
        default: return "overlapping";
    }
}

struct RewriteResult {
    ReuseCase reuse_case = ReuseCase::Exact;
    std::optional<Predicate> post_filter;           // Subsuming / Overlapping
    BoxSet deltas;                                  // Partial / Overlapping, disjoint residuals
    std::optional<std::vector<ColRef>> post_agg_keys;  // aggregate roll-up to G_r when G_r ⊂ G_c

    std::string describe() const {
        std::string s = reuse_case_name(reuse_case);
        if (post_filter) s += " post[" + post_filter->str() + "]";
        if (!deltas.empty()) s += " deltas[" + boxset_str(deltas) + "]";
        if (post_agg_keys) {
            s += " post-agg[";
            for (auto& k : *post_agg_keys) s += k.str() + " ";
            s += "]";
        }
        return s;
    }
};

/// Requesting-side view: the operator's skeleton, its selection predicate
/// restricted to the skeleton's tables, and every attribute the rewritten
/// plan would have to read from the cached table.
struct RequestDesc {
    BuildDesc desc;
    Predicate pred;
    std::vector<ColRef> required_attrs;
};

/// Cached-side view. Content is a union of disjoint boxes: a single box right
/// after a build, possibly more once overlapping reuse folded delta regions in.
struct CachedDesc {
    BuildDesc desc;
    BoxSet content;
    std::vector<ColRef> stored_attrs;
};

namespace matcher {

inline bool skeleton_matches(const BuildDesc& r, const BuildDesc& c) {
    return r.kind == c.kind && r.tables == c.tables && r.edges == c.edges;
}

/// Set relation of request region r against cached content K, in the fixed
/// testing order. nullopt when disjoint (no reuse possible).
inline std::optional<ReuseCase> classify_regions(const Predicate& r, const BoxSet& content) {
    if (r.is_empty() || content.empty()) return std::nullopt;
    if (!set_intersects(content, r)) return std::nullopt;
    bool covers = set_covers(content, r);   // r ⊆ K
    bool within = set_within(content, r);   // K ⊆ r
    if (covers && within) return ReuseCase::Exact;
    if (covers) return ReuseCase::Subsuming;
    if (within) return ReuseCase::Partial;
    return ReuseCase::Overlapping;
}

/// Join-build classification: identical skeleton (same base tables, join
/// edges and hash key), then the predicate relation.
inline std::optional<ReuseCase> classify(const RequestDesc& r, const CachedDesc& c) {
    if (r.desc.kind != HtKind::JoinBuild) return std::nullopt;
    if (!skeleton_matches(r.desc, c.desc)) return std::nullopt;
    if (!(r.desc.key == c.desc.key)) return std::nullopt;
    return classify_regions(r.pred, c.content);
}

/// Aggregate classification: same input skeleton; group keys either equal or
/// a subset of the cached keys when every requested function is additive; the
/// requested functions must be computable from the cached states.
inline std::optional<ReuseCase> classify_aggregate(const RequestDesc& r, const CachedDesc& c) {
    if (r.desc.kind != HtKind::Aggregate || c.desc.kind != HtKind::Aggregate) return std::nullopt;
    if (r.desc.tables != c.desc.tables || r.desc.edges != c.desc.edges) return std::nullopt;
    bool same_keys = r.desc.group_keys == c.desc.group_keys;
    if (!same_keys) {
        if (!std::includes(c.desc.group_keys.begin(), c.desc.group_keys.end(), r.desc.group_keys.begin(),
                           r.desc.group_keys.end()))
            return std::nullopt;
        for (const AggSpec& a : r.desc.aggs) {
            if (!agg_fn_additive(a.fn)) return std::nullopt;
        }
    }
    // every requested function must be stored in the cached table
    for (const AggSpec& a : r.desc.aggs) {
        if (std::find(c.desc.aggs.begin(), c.desc.aggs.end(), a) == c.desc.aggs.end()) return std::nullopt;
    }
    return classify_regions(r.pred, c.content);
}

/// Shared-grouping classification (SRHA path): grouping tables store
/// individual tuples, so any aggregate function can be recomputed; keys must
/// match exactly and the tuples must carry the requested attributes.
inline std::optional<ReuseCase> classify_grouping(const RequestDesc& r, const CachedDesc& c) {
    if (r.desc.kind != HtKind::SharedGrouping || c.desc.kind != HtKind::SharedGrouping) return std::nullopt;
    if (r.desc.tables != c.desc.tables || r.desc.edges != c.desc.edges) return std::nullopt;
    if (r.desc.group_keys != c.desc.group_keys) return std::nullopt;
    return classify_regions(r.pred, c.content);
}

inline bool attrs_cover(const std::vector<ColRef>& stored, const std::set<ColRef>& needed) {
    for (const ColRef& c : needed) {
        if (std::find(stored.begin(), stored.end(), c) == std::end(stored)) return false;
    }
    return true;
}

/// Produces the executable rewrite for a classified pair, or nullopt when the
/// cached table lacks attributes the rewrite would need to read (the
/// disqualification rule). The post filter keeps only the conjuncts the
/// content does not already imply per column.
inline std::optional<RewriteResult> rewrite(const RequestDesc& r, const CachedDesc& c, ReuseCase reuse_case,
                                            size_t max_deltas = 16) {
    RewriteResult out;
    out.reuse_case = reuse_case;

    std::set<ColRef> read_from_table(r.required_attrs.begin(), r.required_attrs.end());
    if (reuse_case == ReuseCase::Subsuming || reuse_case == ReuseCase::Overlapping) {
        Predicate hull = set_hull(c.content);
        Predicate post;
        for (auto& [col, iv] : r.pred.conjuncts()) {
            if (!hull.interval_of(col).subset_of(iv)) post.constrain(col, iv);
        }
        out.post_filter = post;
        for (auto& [col, _] : post.conjuncts()) read_from_table.insert(col);
    }
    if (!attrs_cover(c.stored_attrs, read_from_table)) return std::nullopt;

    if (reuse_case == ReuseCase::Partial || reuse_case == ReuseCase::Overlapping) {
        out.deltas = difference_from_set(r.pred, c.content);
        if (out.deltas.size() > max_deltas) return std::nullopt;
    }
    if ((r.desc.kind == HtKind::Aggregate) && r.desc.group_keys != c.desc.group_keys) {
        out.post_agg_keys = r.desc.group_keys;
    }
    return out;
}

}  // namespace matcher

}  // namespace reusedb
