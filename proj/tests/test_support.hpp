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

// Test-only helpers shared by the unit and acceptance suites: a naive query
// evaluator used as the correctness oracle (hash maps over value tuples,
// independent of the engine's plans, layouts and hash tables), plus a random
// SPJ(A) query generator over the star schema.

#pragma once

#include <map>
#include <random>
#include <unordered_map>

#include "reusedb/datagen.hpp"
#include "reusedb/executor.hpp"
#include "reusedb/query.hpp"

namespace reusedb::testsupport {

using OracleRow = std::map<ColRef, Value>;

inline std::vector<OracleRow> oracle_table_rows(const Database& db, const std::string& table,
                                                const Predicate& slice) {
    const Table& t = db.table(table);
    std::vector<OracleRow> out;
    for (uint32_t r : t.scan_rowids(slice)) {
        OracleRow row;
        for (const ColumnDef& c : t.schema().columns) row[{table, c.name}] = t.value(r, c.name);
        out.push_back(std::move(row));
    }
    return out;
}

/// Naive join: hash the next connected table on one linking edge, merge, and
/// re-check every other edge.
inline std::vector<OracleRow> oracle_join(const Database& db, const QuerySpec& q) {
    std::set<std::string> remaining(q.tables.begin(), q.tables.end());
    std::set<std::string> joined;
    std::vector<OracleRow> acc;

    auto slice_for = [&](const std::string& t) {
        Predicate s;
        for (auto& [col, iv] : q.where.conjuncts()) {
            if (col.table == t) s.constrain(col, iv);
        }
        if (q.where.is_empty()) s = Predicate::falsity();
        return s;
    };

    std::string first = *remaining.begin();
    acc = oracle_table_rows(db, first, slice_for(first));
    joined.insert(first);
    remaining.erase(first);

    while (!remaining.empty()) {
        // find a remaining table linked by an edge to the joined set
        std::string next;
        ColRef join_left, join_right;  // left in joined, right in next
        for (const std::string& t : remaining) {
            for (auto& [a, b] : q.join_edges) {
                if (a.table == t && joined.count(b.table)) {
                    next = t;
                    join_left = b;
                    join_right = a;
                } else if (b.table == t && joined.count(a.table)) {
                    next = t;
                    join_left = a;
                    join_right = b;
                }
            }
            if (!next.empty()) break;
        }
        if (next.empty()) throw std::runtime_error("oracle: disconnected join graph");

        std::unordered_multimap<std::string, OracleRow> by_key;
        for (OracleRow& row : oracle_table_rows(db, next, slice_for(next))) {
            by_key.emplace(value_to_string(row.at(join_right)), std::move(row));
        }
        std::vector<OracleRow> merged;
        for (const OracleRow& left : acc) {
            auto [lo, hi] = by_key.equal_range(value_to_string(left.at(join_left)));
            for (auto it = lo; it != hi; ++it) {
                OracleRow row = left;
                for (auto& [c, v] : it->second) row[c] = v;
                // verify every edge fully inside the joined set
                bool ok = true;
                for (auto& [a, b] : q.join_edges) {
                    if (row.count(a) && row.count(b) && compare_values(row.at(a), row.at(b)) != 0) ok = false;
                }
                if (ok) merged.push_back(std::move(row));
            }
        }
        acc = std::move(merged);
        joined.insert(next);
        remaining.erase(next);
    }
    return acc;
}

inline ResultTable oracle_eval(const Database& db, const QuerySpec& q) {
    std::vector<OracleRow> rows = oracle_join(db, q);
    ResultTable out;
    for (const auto& o : q.select_list) out.columns.push_back(o.label);

    if (!q.is_aggregate_query()) {
        for (const OracleRow& r : rows) {
            std::vector<Value> vals;
            for (const auto& o : q.select_list) vals.push_back(r.at(o.col));
            out.rows.push_back(std::move(vals));
        }
        return out;
    }

    struct Group {
        OracleRow keys;
        std::vector<double> sums;
        std::vector<int64_t> counts;
        std::vector<Value> mins, maxs;
        bool init = false;
    };
    std::map<std::string, Group> groups;
    for (const OracleRow& r : rows) {
        std::string gk;
        for (const ColRef& k : q.group_by) gk += value_to_string(r.at(k)) + "\x1f";
        Group& g = groups[gk];
        if (!g.init) {
            g.init = true;
            for (const ColRef& k : q.group_by) g.keys[k] = r.at(k);
            g.sums.assign(q.aggregates.size(), 0.0);
            g.counts.assign(q.aggregates.size(), 0);
            g.mins.assign(q.aggregates.size(), Value(int64_t(0)));
            g.maxs.assign(q.aggregates.size(), Value(int64_t(0)));
        }
        for (size_t i = 0; i < q.aggregates.size(); ++i) {
            const AggSpec& a = q.aggregates[i];
            if (a.fn == AggFn::Count) {
                g.counts[i]++;
                continue;
            }
            const Value& v = r.at(a.arg);
            double d = v.index() == 1 ? std::get<double>(v) : double(std::get<int64_t>(v));
            if (g.counts[i] == 0) {
                g.mins[i] = v;
                g.maxs[i] = v;
            } else {
                if (compare_values(v, g.mins[i]) < 0) g.mins[i] = v;
                if (compare_values(v, g.maxs[i]) > 0) g.maxs[i] = v;
            }
            g.sums[i] += d;
            g.counts[i]++;
        }
    }
    for (auto& [_, g] : groups) {
        std::vector<Value> vals;
        for (const auto& o : q.select_list) {
            switch (o.kind) {
                case OutputItem::Column: vals.push_back(g.keys.at(o.col)); break;
                case OutputItem::Aggregate: {
                    const AggSpec& a = q.aggregates[o.agg_index];
                    size_t i = o.agg_index;
                    bool real = false;
                    if (!a.arg.column.empty())
                        real = db.table(a.arg.table).schema().column(a.arg.column).type == ColumnType::Float64;
                    switch (a.fn) {
                        case AggFn::Count: vals.push_back(g.counts[i]); break;
                        case AggFn::Sum:
                            if (real) vals.push_back(g.sums[i]);
                            else vals.push_back(int64_t(std::llround(g.sums[i])));
                            break;
                        case AggFn::Min: vals.push_back(g.mins[i]); break;
                        case AggFn::Max: vals.push_back(g.maxs[i]); break;
                        case AggFn::Avg: vals.push_back(g.sums[i] / double(g.counts[i])); break;
                        default: throw std::runtime_error("oracle: unsupported aggregate");
                    }
                    break;
                }
                case OutputItem::AvgOf:
                    throw std::runtime_error("oracle evaluates pre-rewrite queries only");
            }
        }
        out.rows.push_back(std::move(vals));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random SPJ(A) queries over the star schema
// ---------------------------------------------------------------------------

struct QueryGenOptions {
    bool allow_aggregates = true;
    bool allow_spj = true;
    int max_extra_dims = 2;  // part/supplier joins on top of the C-O-L core
};

inline Interval random_date_interval(std::mt19937_64& rng) {
    int64_t span = datagen::kDateHi - datagen::kDateLo;
    int64_t a = datagen::kDateLo + int64_t(rng() % uint64_t(span));
    int64_t w = 30 + int64_t(rng() % 900);
    return Interval::half_open(a, std::min(a + w, datagen::kDateHi + 1));
}

inline QuerySpec random_query(const Database& db, std::mt19937_64& rng, const QueryGenOptions& opt = {}) {
    (void)db;
    QuerySpec q;
    // core shapes: single tables, C-O, O-L, C-O-L; optionally + part/supplier
    int shape = int(rng() % 6);
    auto add_edge = [&](const char* a_t, const char* a_c, const char* b_t, const char* b_c) {
        q.join_edges.emplace_back(ColRef{a_t, a_c}, ColRef{b_t, b_c});
    };
    switch (shape) {
        case 0: q.tables = {"orders"}; break;
        case 1: q.tables = {"customer"}; break;
        case 2:
            q.tables = {"customer", "orders"};
            add_edge("customer", "c_custkey", "orders", "o_custkey");
            break;
        case 3:
            q.tables = {"orders", "lineitem"};
            add_edge("orders", "o_orderkey", "lineitem", "l_orderkey");
            break;
        default:
            q.tables = {"customer", "orders", "lineitem"};
            add_edge("customer", "c_custkey", "orders", "o_custkey");
            add_edge("orders", "o_orderkey", "lineitem", "l_orderkey");
            break;
    }
    bool has_li = std::find(q.tables.begin(), q.tables.end(), "lineitem") != q.tables.end();
    if (has_li && opt.max_extra_dims > 0 && rng() % 3 == 0) {
        q.tables.push_back("part");
        add_edge("lineitem", "l_partkey", "part", "p_partkey");
    }
    if (has_li && opt.max_extra_dims > 1 && rng() % 4 == 0) {
        q.tables.push_back("supplier");
        add_edge("lineitem", "l_suppkey", "supplier", "s_suppkey");
    }
    auto has = [&](const char* t) {
        return std::find(q.tables.begin(), q.tables.end(), t) != q.tables.end();
    };

    // predicates on the indexed attributes
    if (has("orders") && rng() % 2 == 0) q.where.constrain({"orders", "o_orderdate"}, random_date_interval(rng));
    if (has("lineitem") && rng() % 2 == 0)
        q.where.constrain({"lineitem", "l_shipdate"}, random_date_interval(rng));
    if (has("customer") && rng() % 3 == 0) {
        q.where.constrain({"customer", "c_mktsegment"},
                          Interval::point(Value(datagen::kSegments[rng() % datagen::kSegments.size()])));
    }
    if (has("customer") && rng() % 3 == 0) {
        int64_t lo = 18 + int64_t(rng() % 50);
        q.where.constrain({"customer", "c_age"}, Interval::closed(lo, lo + 10 + int64_t(rng() % 30)));
    }
    if (has("part") && rng() % 3 == 0) {
        int64_t lo = 1 + int64_t(rng() % 30);
        q.where.constrain({"part", "p_size"}, Interval::closed(lo, lo + int64_t(rng() % 15)));
    }

    bool agg = opt.allow_aggregates && (!opt.allow_spj || rng() % 3 != 0);
    if (agg) {
        std::vector<ColRef> key_pool;
        if (has("orders")) key_pool.push_back({"orders", "o_shippriority"});
        if (has("customer")) key_pool.push_back({"customer", "c_mktsegment"});
        if (has("part")) key_pool.push_back({"part", "p_brand"});
        if (has("supplier")) key_pool.push_back({"supplier", "s_nationkey"});
        if (has("customer")) key_pool.push_back({"customer", "c_age"});
        size_t nkeys = key_pool.empty() ? 0 : rng() % std::min<size_t>(key_pool.size() + 1, 3);
        std::shuffle(key_pool.begin(), key_pool.end(), rng);
        for (size_t i = 0; i < nkeys; ++i) q.group_by.push_back(key_pool[i]);

        std::vector<AggSpec> pool;
        pool.push_back({AggFn::Count, {}});
        if (has("lineitem")) {
            pool.push_back({AggFn::Sum, {"lineitem", "l_extendedprice"}});
            pool.push_back({AggFn::Min, {"lineitem", "l_quantity"}});
            pool.push_back({AggFn::Avg, {"lineitem", "l_extendedprice"}});
        }
        if (has("orders")) {
            pool.push_back({AggFn::Sum, {"orders", "o_totalprice"}});
            pool.push_back({AggFn::Max, {"orders", "o_totalprice"}});
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        size_t naggs = 1 + rng() % std::min<size_t>(pool.size(), 3);
        for (size_t i = 0; i < naggs; ++i) {
            size_t idx = q.aggregates.size();
            bool dup = false;
            for (auto& a : q.aggregates) dup |= a == pool[i];
            if (dup) continue;
            q.aggregates.push_back(pool[i]);
            OutputItem o;
            o.kind = OutputItem::Aggregate;
            o.agg_index = idx;
            o.label = pool[i].str();
            q.select_list.push_back(o);
        }
        for (const ColRef& k : q.group_by) {
            OutputItem o;
            o.kind = OutputItem::Column;
            o.col = k;
            o.label = k.str();
            q.select_list.push_back(o);
        }
    } else {
        // plain SPJ: project a couple of columns
        std::vector<ColRef> cols;
        if (has("orders")) cols.push_back({"orders", "o_orderkey"});
        if (has("customer")) cols.push_back({"customer", "c_custkey"});
        if (has("lineitem")) cols.push_back({"lineitem", "l_extendedprice"});
        if (has("part")) cols.push_back({"part", "p_brand"});
        for (const ColRef& c : cols) {
            OutputItem o;
            o.kind = OutputItem::Column;
            o.col = c;
            o.label = c.str();
            q.select_list.push_back(o);
        }
        // keep SPJ outputs bounded
        if (!q.where.conjuncts().count({"orders", "o_orderdate"}) && has("orders"))
            q.where.constrain({"orders", "o_orderdate"}, random_date_interval(rng));
    }
    q.canonicalize();
    return q;
}

}  // namespace reusedb::testsupport
