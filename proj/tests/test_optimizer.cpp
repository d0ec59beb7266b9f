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

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "reusedb/engine.hpp"
#include "test_support.hpp"

using namespace reusedb;
using namespace reusedb::testsupport;

namespace {

Engine make_engine(double scale = 0.001, uint64_t seed = 7) {
    return Engine(generate_dataset(scale, seed), synthetic_calibration());
}

// ---------------------------------------------------------------------------
// Independent exhaustive plan enumerator: no memoization, every ordered
// partition, every crossing edge as hash key, every cached candidate plus a
// fresh table. Shares only the public cost-model/matcher building blocks with
// the implementation under test.
// ---------------------------------------------------------------------------

struct ExhaustiveEnumerator {
    const Database& db;
    HashTableManager* htm;
    const CostModel& model;
    const QuerySpec& q;
    JoinGraph graph;

    ExhaustiveEnumerator(Engine& eng, const QuerySpec& query)
        : db(eng.db()), htm(&eng.htm()), model(eng.model()), q(query),
          graph(JoinGraph::from_query(query, eng.db())) {}

    std::vector<std::string> tables_of(uint32_t mask) const {
        std::vector<std::string> out;
        for (size_t i = 0; i < graph.tables.size(); ++i)
            if (mask & (1u << i)) out.push_back(graph.tables[i]);
        return out;
    }

    std::vector<std::pair<ColRef, ColRef>> edges_of(uint32_t mask) const {
        std::vector<std::pair<ColRef, ColRef>> out;
        for (const auto& e : graph.edges) {
            if ((mask & (1u << e.a)) && (mask & (1u << e.b))) {
                auto p = std::make_pair(e.col_a, e.col_b);
                if (p.second < p.first) std::swap(p.first, p.second);
                out.push_back(p);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    Predicate slice_of(const Predicate& preds, uint32_t mask) const {
        std::set<std::string> names;
        for (auto& t : tables_of(mask)) names.insert(t);
        Predicate out;
        for (auto& [col, iv] : preds.conjuncts())
            if (names.count(col.table)) out.constrain(col, iv);
        return out;
    }

    std::set<ColRef> needed_out(uint32_t mask) const {
        std::set<std::string> names;
        for (auto& t : tables_of(mask)) names.insert(t);
        std::set<ColRef> out;
        auto take = [&](const ColRef& c) {
            if (names.count(c.table)) out.insert(c);
        };
        for (auto& k : q.group_by) take(k);
        for (auto& a : q.aggregates)
            if (!a.arg.column.empty()) take(a.arg);
        for (auto& s : q.select_list)
            if (s.kind == OutputItem::Column) take(s.col);
        for (const auto& e : graph.edges) {
            bool a_in = (mask >> e.a) & 1, b_in = (mask >> e.b) & 1;
            if (a_in && !b_in) out.insert(e.col_a);
            if (!a_in && b_in) out.insert(e.col_b);
        }
        return out;
    }

    std::vector<ColRef> fresh_stored_attrs(uint32_t mask, const ColRef& key) const {
        std::set<ColRef> cols = needed_out(mask);
        cols.insert(key);
        std::set<std::string> names;
        for (auto& t : tables_of(mask)) names.insert(t);
        for (auto& [col, _] : q.where.conjuncts())
            if (names.count(col.table)) cols.insert(col);
        return {cols.begin(), cols.end()};
    }

    double scan_cost(uint32_t mask, const Predicate& preds) const {
        int v = __builtin_ctz(mask);
        const std::string& tname = graph.tables[size_t(v)];
        const Table& t = db.table(tname);
        Predicate slice = slice_of(preds, mask);
        double row_bytes = 0;
        for (const ColumnDef& c : t.schema().columns) row_bytes += c.byte_width();
        double full = model.cost_scan(double(t.row_count()), row_bytes);
        double best_frac = 0.5;
        bool use_index = false;
        for (auto& [col, iv] : slice.conjuncts()) {
            if (!t.has_index(col.column)) continue;
            double frac = model.cards().interval_fraction(col, iv);
            if (frac < best_frac) {
                best_frac = frac;
                use_index = true;
            }
        }
        if (!use_index) return full;
        double idx = model.cost_index_scan(double(t.row_count()) * best_frac, row_bytes, double(t.row_count()));
        return std::min(full, idx);
    }

    double rows_of(uint32_t mask, const Predicate& preds) const {
        return model.cards().join_rows(tables_of(mask), edges_of(mask), preds);
    }

    double best_cost(uint32_t mask, const Predicate& preds, int depth) const {
        if (__builtin_popcount(mask) == 1) return scan_cost(mask, preds);
        double best = 1e300;
        for (uint32_t sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
            uint32_t rest = mask ^ sub;
            if (!graph.connected(sub) || !graph.connected(rest)) continue;
            if (!graph.edge_between(sub, rest)) continue;
            std::vector<std::pair<ColRef, ColRef>> crossing;
            for (const auto& e : graph.edges) {
                bool a_sub = (sub >> e.a) & 1, b_rest = (rest >> e.b) & 1;
                bool b_sub = (sub >> e.b) & 1, a_rest = (rest >> e.a) & 1;
                if (a_sub && b_rest) crossing.emplace_back(e.col_a, e.col_b);
                else if (b_sub && a_rest) crossing.emplace_back(e.col_b, e.col_a);
            }
            std::sort(crossing.begin(), crossing.end());
            crossing.erase(std::unique(crossing.begin(), crossing.end()), crossing.end());
            double probe_cost = best_cost(sub, preds, depth);
            double probe_rows = rows_of(sub, preds);
            for (auto& [probe_col, build_col] : crossing) {
                Predicate slice = slice_of(preds, rest);
                double probe_ndv = model.cards().distinct_values(probe_col);

                // fresh
                {
                    auto stored = fresh_stored_attrs(rest, build_col);
                    auto geom = fresh_candidate_geometry(8, columns_byte_width(db, stored), false);
                    ReuseStats st = model.join_stats(tables_of(rest), edges_of(rest), slice, {}, geom, build_col,
                                                     probe_rows, probe_ndv);
                    best = std::min(best, probe_cost + best_cost(rest, preds, depth) + model.cost_rhj(st));
                }
                if (htm && depth < Optimizer::kMaxDeltaDepth) {
                    RequestDesc req;
                    req.desc.kind = HtKind::JoinBuild;
                    req.desc.tables = tables_of(rest);
                    req.desc.edges = edges_of(rest);
                    req.desc.key = build_col;
                    req.desc.canonicalize();
                    req.pred = slice;
                    auto needed = needed_out(rest);
                    needed.insert(build_col);
                    req.required_attrs = {needed.begin(), needed.end()};
                    for (Candidate& cand : htm->get_candidates(req)) {
                        const CacheEntry& e = htm->entry(cand.entry_id);
                        ReuseStats st = model.join_stats(tables_of(rest), edges_of(rest), slice, e.content,
                                                         geometry_of(e), build_col, probe_rows, probe_ndv);
                        double cost = probe_cost + model.cost_rhj(st);
                        for (const Predicate& box : cand.rewrite.deltas)
                            cost += best_cost(rest, box, depth + 1);
                        best = std::min(best, cost);
                    }
                }
            }
        }
        return best;
    }
};

}  // namespace

TEST_CASE("single table, empty cache: a scan plan", "[optimizer]") {
    Engine eng = make_engine();
    QuerySpec q = eng.parse("SELECT o_orderkey FROM orders WHERE o_orderdate >= '1995-01-01'");
    PhysicalPlan plan = eng.plan(q, ExecutionMode::NoReuse);
    REQUIRE(plan.root);
    CHECK(plan.root->op == PlanNode::Op::TableScan);
    CHECK(plan.root->est_cost > 0);
    CHECK(plan.pin_set.empty());
}

TEST_CASE("disconnected graph is a planning error", "[optimizer]") {
    Engine eng = make_engine();
    QuerySpec q;
    q.tables = {"customer", "part"};
    OutputItem o;
    o.kind = OutputItem::Column;
    o.col = {"part", "p_brand"};
    o.label = "b";
    q.select_list.push_back(o);
    CHECK_THROWS_AS(eng.plan(q, ExecutionMode::NoReuse), PlanningError);
}

TEST_CASE("memoized search equals exhaustive enumeration", "[optimizer]") {
    Engine eng = make_engine(0.001, 21);
    std::mt19937_64 rng(99);
    QueryGenOptions opt;
    opt.allow_aggregates = false;

    // empty cache first, then against random cache states
    int planned = 0;
    for (int round = 0; round < 2; ++round) {
        for (int iter = 0; iter < 12; ++iter) {
            QuerySpec q = random_query(eng.db(), rng, opt);
            Optimizer optz(eng.db(), &eng.htm(), eng.model(), Strategy::CostModel);
            auto [cost, plan] = optz.best_join_plan(q);
            ExhaustiveEnumerator oracle(eng, q);
            double want = oracle.best_cost(oracle.graph.full_mask(), q.where, 0);
            CHECK(cost == Catch::Approx(want).epsilon(1e-9));
            planned++;
        }
        // seed the cache with a handful of executed queries
        for (int i = 0; i < 6; ++i) {
            QuerySpec q = random_query(eng.db(), rng, opt);
            eng.run(q, ExecutionMode::HashStashReuse);
        }
    }
    REQUIRE(planned == 24);
}

TEST_CASE("chosen cost never exceeds never-share and always-share estimates", "[optimizer]") {
    Engine eng = make_engine(0.001, 31);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 8; ++i) {
        eng.run(random_query(eng.db(), rng), ExecutionMode::HashStashReuse);
    }
    for (int i = 0; i < 20; ++i) {
        QuerySpec q = random_query(eng.db(), rng);
        PhysicalPlan never = eng.plan(q, ExecutionMode::HashStashReuse, Strategy::NeverShare);
        PhysicalPlan always = eng.plan(q, ExecutionMode::HashStashReuse, Strategy::AlwaysShare);
        for (uint64_t id : always.pin_set) eng.htm().release(id);
        PhysicalPlan chosen = eng.plan(q, ExecutionMode::HashStashReuse, Strategy::CostModel);
        for (uint64_t id : chosen.pin_set) eng.htm().release(id);
        CHECK(chosen.est_cost <= never.est_cost * (1 + 1e-9));
        CHECK(chosen.est_cost <= always.est_cost * (1 + 1e-9));
    }
}

TEST_CASE("follow-up query reuses the join table exactly and the aggregate partially", "[optimizer]") {
    Engine eng = make_engine(0.002, 7);
    // Q1: aggregation over the 3-way join, lineitems shipped after a date
    QuerySpec q1 = eng.parse(
        "SELECT SUM(l_extendedprice), COUNT(*), o_shippriority FROM customer, orders, lineitem "
        "WHERE c_custkey = o_custkey AND o_orderkey = l_orderkey AND l_shipdate >= '1995-02-01' "
        "GROUP BY o_shippriority");
    eng.run(q1, ExecutionMode::HashStashReuse);
    REQUIRE(eng.htm().entry_count() == 3);  // customer HT, C⋈O HT, aggregate HT
    CHECK(eng.htm().flagged_node_count() == 3);

    // Q2 only widens the shipdate filter
    QuerySpec q2 = eng.parse(
        "SELECT SUM(l_extendedprice), COUNT(*), o_shippriority FROM customer, orders, lineitem "
        "WHERE c_custkey = o_custkey AND o_orderkey = l_orderkey AND l_shipdate >= '1995-01-01' "
        "GROUP BY o_shippriority");
    PhysicalPlan plan = eng.plan(q2, ExecutionMode::HashStashReuse);
    REQUIRE(plan.root->op == PlanNode::Op::HashAggregate);
    REQUIRE(!plan.root->reuse.fresh);
    CHECK(plan.root->reuse.rewrite.reuse_case == ReuseCase::Partial);
    REQUIRE(plan.root->delta_plans.size() == 1);
    // the delta join reuses the cached C⋈O table instead of recomputing it
    const PlanNode& delta = *plan.root->delta_plans[0];
    REQUIRE(delta.op == PlanNode::Op::HashJoin);
    bool delta_reuses_join = !delta.reuse.fresh;
    CHECK(delta_reuses_join);
    // and scans only the missing lineitem range
    for (uint64_t id : plan.pin_set) eng.htm().release(id);

    auto [r2, rep2] = eng.run(q2, ExecutionMode::HashStashReuse);
    ResultTable want = oracle_eval(eng.db(), q2);
    CHECK(r2.equals_multiset(want));
    CHECK(rep2.cache_hits >= 2);
    // only the lineitem base table had to be touched for the delta
    CHECK(rep2.base_tables_touched == std::set<std::string>{"lineitem"});
}

TEST_CASE("roll-up removes a group key and eliminates all scans", "[optimizer]") {
    Engine eng = make_engine(0.001, 7);
    QuerySpec q1 = eng.parse(
        "SELECT SUM(l_extendedprice), o_shippriority, c_mktsegment FROM customer, orders, lineitem "
        "WHERE c_custkey = o_custkey AND o_orderkey = l_orderkey AND o_orderdate >= '1994-01-01' "
        "GROUP BY o_shippriority, c_mktsegment");
    eng.run(q1, ExecutionMode::HashStashReuse);

    QuerySpec q2 = eng.parse(
        "SELECT SUM(l_extendedprice), o_shippriority FROM customer, orders, lineitem "
        "WHERE c_custkey = o_custkey AND o_orderkey = l_orderkey AND o_orderdate >= '1994-01-01' "
        "GROUP BY o_shippriority");
    auto [r2, rep2] = eng.run(q2, ExecutionMode::HashStashReuse);
    CHECK(rep2.base_tables_touched.empty());
    CHECK(rep2.base_rows_read == 0);
    CHECK(r2.equals_multiset(oracle_eval(eng.db(), q2)));
}

TEST_CASE("AVG is planned as SUM and COUNT", "[optimizer]") {
    Engine eng = make_engine(0.001, 7);
    QuerySpec q = eng.parse(
        "SELECT AVG(l_extendedprice), o_shippriority FROM orders, lineitem "
        "WHERE o_orderkey = l_orderkey AND o_orderdate >= '1996-01-01' GROUP BY o_shippriority");
    QuerySpec rewritten = Optimizer::apply_benefit_rewrites(q);
    REQUIRE(rewritten.aggregates.size() == 2);
    CHECK(rewritten.aggregates[0].fn == AggFn::Sum);
    CHECK(rewritten.aggregates[1].fn == AggFn::Count);
    bool has_avgof = false;
    for (auto& o : rewritten.select_list) has_avgof |= o.kind == OutputItem::AvgOf;
    CHECK(has_avgof);

    auto [res, rep] = eng.run(q, ExecutionMode::NoReuse);
    CHECK(res.equals_multiset(oracle_eval(eng.db(), q)));
}

TEST_CASE("build-side selection attributes are stored for later post-filtering", "[optimizer]") {
    Engine eng = make_engine(0.001, 7);
    QuerySpec q = eng.parse(
        "SELECT o_orderkey, l_extendedprice FROM orders, lineitem "
        "WHERE o_orderkey = l_orderkey AND o_orderdate >= '1996-01-01' AND o_orderdate < '1996-06-01'");
    PhysicalPlan plan = eng.plan(q, ExecutionMode::NoReuse);
    // whichever side builds over orders must store o_orderdate
    std::function<bool(const PlanNode&)> stores_date = [&](const PlanNode& n) {
        bool here = false;
        if (n.op == PlanNode::Op::HashJoin) {
            for (auto& c : n.stored_attrs) here |= c == ColRef{"orders", "o_orderdate"};
            bool build_is_orders =
                std::find(n.desc.tables.begin(), n.desc.tables.end(), "orders") != n.desc.tables.end();
            if (build_is_orders) return here;
        }
        if (n.build && stores_date(*n.build)) return true;
        if (n.probe && stores_date(*n.probe)) return true;
        return false;
    };
    CHECK(stores_date(*plan.root));
}

TEST_CASE("history breaks near-ties toward the hotter build side", "[optimizer]") {
    // two identical tables joined on id: both build sides cost the same
    Database db;
    Schema sa;
    sa.table = "ta";
    sa.columns = {{"a_id", ColumnType::Int64, 8}, {"a_v", ColumnType::Int64, 8}};
    sa.primary_key = "a_id";
    Schema sb;
    sb.table = "tb";
    sb.columns = {{"b_id", ColumnType::Int64, 8}, {"b_v", ColumnType::Int64, 8}};
    sb.primary_key = "b_id";
    Table ta(sa), tb(sb);
    for (int64_t i = 0; i < 500; ++i) {
        ta.append_row({i, i % 7});
        tb.append_row({i, i % 5});
    }
    ta.finalize();
    tb.finalize();
    db.add(std::move(ta));
    db.add(std::move(tb));
    Engine eng(std::move(db), synthetic_calibration());

    QuerySpec q;
    q.tables = {"ta", "tb"};
    q.join_edges.emplace_back(ColRef{"ta", "a_id"}, ColRef{"tb", "b_id"});
    OutputItem o;
    o.kind = OutputItem::Column;
    o.col = {"ta", "a_v"};
    o.label = "v";
    q.select_list.push_back(o);
    q.canonicalize();

    eng.history().record(HistoryStats::signature({"tb"}, Predicate()));
    PhysicalPlan p1 = eng.plan(q, ExecutionMode::NoReuse);
    CHECK(p1.root->desc.tables == std::vector<std::string>{"tb"});

    eng.reset_caches();
    eng.history().record(HistoryStats::signature({"ta"}, Predicate()));
    eng.history().record(HistoryStats::signature({"ta"}, Predicate()));
    PhysicalPlan p2 = eng.plan(q, ExecutionMode::NoReuse);
    CHECK(p2.root->desc.tables == std::vector<std::string>{"ta"});
}

TEST_CASE("always-share picks the highest contribution candidate", "[optimizer]") {
    Engine eng = make_engine(0.001, 7);
    // seed two overlapping cached builds over orders
    QuerySpec wide = eng.parse(
        "SELECT o_orderkey, l_extendedprice FROM orders, lineitem WHERE o_orderkey = l_orderkey "
        "AND o_orderdate >= '1993-01-01'");
    eng.run(wide, ExecutionMode::HashStashReuse);

    QuerySpec narrow = eng.parse(
        "SELECT o_orderkey, l_extendedprice FROM orders, lineitem WHERE o_orderkey = l_orderkey "
        "AND o_orderdate >= '1995-01-01'");
    PhysicalPlan plan = eng.plan(narrow, ExecutionMode::HashStashReuse, Strategy::AlwaysShare);
    // the orders-side build must reuse (greedy), never build fresh
    std::function<bool(const PlanNode&)> reused = [&](const PlanNode& n) {
        if (n.op == PlanNode::Op::HashJoin && n.desc.tables == std::vector<std::string>{"orders"})
            return !n.reuse.fresh;
        bool any = false;
        if (n.build) any |= reused(*n.build);
        if (n.probe) any |= reused(*n.probe);
        return any;
    };
    CHECK(reused(*plan.root));
    for (uint64_t id : plan.pin_set) eng.htm().release(id);
}
