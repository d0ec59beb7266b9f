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

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "reusedb/hashtable.hpp"
#include "reusedb/predicate.hpp"
#include "reusedb/table.hpp"

namespace reusedb {

// ---------------------------------------------------------------------------
// Aggregates
// ---------------------------------------------------------------------------

enum class AggFn : uint8_t { Sum, Count, Min, Max, Avg, Median };

inline const char* agg_fn_name(AggFn f) {
    switch (f) {
        case AggFn::Sum: return "SUM";
        case AggFn::Count: return "COUNT";
        case AggFn::Min: return "MIN";
        case AggFn::Max: return "MAX";
        case AggFn::Avg: return "AVG";
        default: return "MEDIAN";
    }
}

/// Additive aggregates can be re-aggregated over coarser group-by keys from
/// their stored states. AVG counts as additive because plans always carry it
/// as a (SUM, COUNT) pair.
inline bool agg_fn_additive(AggFn f) { return f != AggFn::Median; }

struct AggSpec {
    AggFn fn = AggFn::Count;
    ColRef arg;  // empty column for COUNT(*)

    bool operator==(const AggSpec&) const = default;
    auto operator<=>(const AggSpec&) const = default;

    std::string str() const {
        return std::string(agg_fn_name(fn)) + "(" + (arg.column.empty() ? "*" : arg.str()) + ")";
    }
};

// ---------------------------------------------------------------------------
// Query blocks
// ---------------------------------------------------------------------------

struct OutputItem {
    enum Kind { Column, Aggregate, AvgOf } kind = Column;
    ColRef col;             // Column
    size_t agg_index = 0;   // Aggregate
    size_t sum_index = 0;   // AvgOf: SUM state
    size_t count_index = 0; // AvgOf: COUNT state
    std::string label;
};

/// One SPJ or SPJA block: tables, equi-join edges, conjunctive interval
/// predicate, optional grouping and aggregates.
struct QuerySpec {
    std::vector<std::string> tables;                   // sorted, unique
    std::vector<std::pair<ColRef, ColRef>> join_edges; // canonical (lhs < rhs), sorted
    Predicate where;
    std::vector<ColRef> group_by;                      // sorted
    std::vector<AggSpec> aggregates;
    std::vector<OutputItem> select_list;
    std::string text;  // original text, if parsed

    bool is_aggregate_query() const { return !aggregates.empty() || !group_by.empty(); }

    /// Conjuncts restricted to the given tables.
    Predicate slice(const std::set<std::string>& subset) const {
        if (where.is_empty()) return Predicate::falsity();
        Predicate out;
        for (auto& [col, iv] : where.conjuncts()) {
            if (subset.count(col.table)) out.constrain(col, iv);
        }
        return out;
    }

    void canonicalize() {
        std::sort(tables.begin(), tables.end());
        tables.erase(std::unique(tables.begin(), tables.end()), tables.end());
        for (auto& e : join_edges) {
            if (e.second < e.first) std::swap(e.first, e.second);
        }
        std::sort(join_edges.begin(), join_edges.end());
        join_edges.erase(std::unique(join_edges.begin(), join_edges.end()), join_edges.end());
        std::sort(group_by.begin(), group_by.end());
        group_by.erase(std::unique(group_by.begin(), group_by.end()), group_by.end());
    }

    /// Join-graph identity (tables plus edges), the batch mergeability key.
    std::string join_graph_signature() const {
        std::string s;
        for (auto& t : tables) s += t + ";";
        s += "|";
        for (auto& e : join_edges) s += e.first.str() + "=" + e.second.str() + ";";
        return s;
    }
};

/// Join graph of a query block: vertices are base tables with their pushed
/// down selections, edges are equi-join conditions.
struct JoinGraph {
    struct Edge {
        int a = 0, b = 0;
        ColRef col_a, col_b;
    };

    std::vector<std::string> tables;
    std::vector<Edge> edges;
    Predicate predicates;

    int vertex(const std::string& t) const {
        for (size_t i = 0; i < tables.size(); ++i) {
            if (tables[i] == t) return int(i);
        }
        return -1;
    }

    uint32_t full_mask() const { return uint32_t((1u << tables.size()) - 1); }

    bool connected(uint32_t mask) const {
        if (mask == 0) return false;
        uint32_t seen = mask & (mask ^ (mask - 1));  // lowest set bit
        bool grew = true;
        while (grew) {
            grew = false;
            for (const Edge& e : edges) {
                uint32_t ba = 1u << e.a, bb = 1u << e.b;
                if ((mask & ba) && (mask & bb)) {
                    if ((seen & ba) && !(seen & bb)) {
                        seen |= bb;
                        grew = true;
                    } else if ((seen & bb) && !(seen & ba)) {
                        seen |= ba;
                        grew = true;
                    }
                }
            }
        }
        return seen == mask;
    }

    bool edge_between(uint32_t m1, uint32_t m2) const {
        for (const Edge& e : edges) {
            uint32_t ba = 1u << e.a, bb = 1u << e.b;
            if (((m1 & ba) && (m2 & bb)) || ((m1 & bb) && (m2 & ba))) return true;
        }
        return false;
    }

    static JoinGraph from_query(const QuerySpec& q, const Database& db) {
        JoinGraph g;
        g.tables = q.tables;
        for (auto& t : g.tables) {
            if (!db.has_table(t)) throw SchemaError("unknown table " + t);
        }
        for (auto& [a, b] : q.join_edges) {
            Edge e;
            e.a = g.vertex(a.table);
            e.b = g.vertex(b.table);
            if (e.a < 0 || e.b < 0) throw PlanningError("join edge references table outside FROM list");
            e.col_a = a;
            e.col_b = b;
            g.edges.push_back(e);
        }
        for (auto& [col, _] : q.where.conjuncts()) {
            if (g.vertex(col.table) < 0) throw SchemaError("predicate references table outside FROM list: " + col.str());
            db.table(col.table).schema().column(col.column);
        }
        g.predicates = q.where;
        if (!g.connected(g.full_mask())) throw PlanningError("join graph is not connected");
        return g;
    }
};

// ---------------------------------------------------------------------------
// Lineage descriptors
// ---------------------------------------------------------------------------

/// Skeleton of the plan subtree that produced (or would produce) a hash table:
/// operator kind, base tables, join edges among them, the hash key, and for
/// aggregates the group-by keys and functions. Join order inside the subtree
/// is normalized away since it does not change the table's content.
struct BuildDesc {
    HtKind kind = HtKind::JoinBuild;
    std::vector<std::string> tables;
    std::vector<std::pair<ColRef, ColRef>> edges;
    ColRef key;                      // JoinBuild: hashed column
    std::vector<ColRef> group_keys;  // Aggregate / SharedGrouping, sorted
    std::vector<AggSpec> aggs;       // Aggregate, sorted

    void canonicalize() {
        std::sort(tables.begin(), tables.end());
        for (auto& e : edges) {
            if (e.second < e.first) std::swap(e.first, e.second);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        std::sort(group_keys.begin(), group_keys.end());
        std::sort(aggs.begin(), aggs.end());
    }

    /// Skeleton identity shared by all group-key/function variants.
    std::string input_signature() const {
        std::string s = "tables=";
        for (auto& t : tables) s += t + ",";
        s += "|edges=";
        for (auto& e : edges) s += e.first.str() + "=" + e.second.str() + ",";
        return s;
    }

    std::string signature() const {
        std::string s = std::string(ht_kind_name(kind)) + "|" + input_signature();
        if (kind == HtKind::JoinBuild) s += "|key=" + key.str();
        if (kind != HtKind::JoinBuild) {
            s += "|keys=";
            for (auto& k : group_keys) s += k.str() + ",";
        }
        if (kind == HtKind::Aggregate) {
            s += "|fns=";
            for (auto& a : aggs) s += a.str() + ",";
        }
        return s;
    }

    bool operator==(const BuildDesc& o) const { return signature() == o.signature(); }
};

}  // namespace reusedb
