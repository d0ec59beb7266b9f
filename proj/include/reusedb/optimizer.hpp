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

#include "reusedb/costmodel.hpp"
#include "reusedb/htm.hpp"
#include "reusedb/plan.hpp"

namespace reusedb {

enum class Strategy : uint8_t { CostModel, AlwaysShare, NeverShare };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::CostModel: return "cost-model";
        case Strategy::AlwaysShare: return "always-share";
        default: return "never-share";
    }
}

/// Decayed frequency counts of build-side signatures from executed plans;
/// breaks near-tie join-order decisions toward historically hot builds.
class HistoryStats {
  public:
    static std::string signature(const std::vector<std::string>& tables, const Predicate& slice) {
        std::string s;
        for (auto& t : tables) s += t + ",";
        s += "|";
        for (auto& [col, _] : slice.conjuncts()) s += col.str() + ",";
        return s;
    }

    void decay(double factor = 0.9) {
        for (auto& [_, v] : counts_) v *= factor;
    }

    void record(const std::string& sig) { counts_[sig] += 1.0; }

    double score(const std::string& sig) const {
        auto it = counts_.find(sig);
        return it == counts_.end() ? 0.0 : it->second;
    }

  private:
    std::map<std::string, double> counts_;
};

struct TraceEntry {
    uint32_t mask = 0;
    std::string group;    // joined table names of the enumerated subset
    std::string label;    // candidate description
    double est_cost = 0;
    std::shared_ptr<PlanNode> plan;
};
using TraceLog = std::vector<TraceEntry>;

/// Reuse-aware plan enumeration: top-down partitioning of the join graph with
/// memoization, candidate hash tables (cached plus a fresh one) per build
/// side, matcher rewrites, and the SPJA extension on top.
class Optimizer {
  public:
    static constexpr double kTieEpsilon = 0.05;  // benefit tie-break band
    static constexpr int kMaxDeltaDepth = 2;

    Optimizer(const Database& db, HashTableManager* htm, const CostModel& model,
              Strategy strategy = Strategy::CostModel, HistoryStats* history = nullptr, TraceLog* trace = nullptr,
              bool shared = false)
        : db_(db), htm_(htm), model_(model), strategy_(strategy), history_(history), trace_(trace),
          shared_(shared) {}

    /// AVG is always carried as SUM and COUNT with a division at emit, which
    /// keeps the aggregate state reusable for partial and overlapping cases.
    static QuerySpec apply_benefit_rewrites(const QuerySpec& q) {
        QuerySpec out = q;
        bool has_avg = false;
        for (const AggSpec& a : q.aggregates) has_avg |= a.fn == AggFn::Avg;
        if (!has_avg) return out;
        out.aggregates.clear();
        auto intern = [&out](AggSpec spec) {
            for (size_t i = 0; i < out.aggregates.size(); ++i) {
                if (out.aggregates[i] == spec) return i;
            }
            out.aggregates.push_back(spec);
            return out.aggregates.size() - 1;
        };
        std::vector<size_t> remap(q.aggregates.size(), SIZE_MAX);
        std::vector<std::pair<size_t, size_t>> avg_parts(q.aggregates.size());
        for (size_t i = 0; i < q.aggregates.size(); ++i) {
            const AggSpec& a = q.aggregates[i];
            if (a.fn == AggFn::Avg) {
                avg_parts[i] = {intern({AggFn::Sum, a.arg}), intern({AggFn::Count, {}})};
            } else {
                remap[i] = intern(a);
            }
        }
        for (OutputItem& o : out.select_list) {
            if (o.kind != OutputItem::Aggregate) continue;
            const AggSpec& a = q.aggregates[o.agg_index];
            if (a.fn == AggFn::Avg) {
                o.kind = OutputItem::AvgOf;
                o.sum_index = avg_parts[o.agg_index].first;
                o.count_index = avg_parts[o.agg_index].second;
            } else {
                o.agg_index = remap[o.agg_index];
            }
        }
        return out;
    }

    PhysicalPlan plan_query(const QuerySpec& query) {
        QuerySpec q = apply_benefit_rewrites(query);
        q.canonicalize();
        graph_ = JoinGraph::from_query(q, db_);
        query_ = &q;

        PhysicalPlan plan;
        plan.query = q;
        Ctx root_ctx{q.where, 0, {}};
        if (q.is_aggregate_query()) {
            plan.root = plan_spja(root_ctx, q);
        } else {
            plan.root = best(root_ctx, graph_.full_mask()).second->clone();
        }
        assign_out_cols(*plan.root, top_required(q));
        plan.est_cost = plan.root->est_cost;
        plan.root->collect_entries(plan.pin_set);
        if (htm_) {
            for (uint64_t id : plan.pin_set) htm_->pin(id);
        }
        return plan;
    }

    /// Exposed for tests: best join plan over the whole graph of `q` (no
    /// aggregate handling, no pinning).
    std::pair<double, PlanNodePtr> best_join_plan(const QuerySpec& query) {
        QuerySpec q = query;
        q.canonicalize();
        graph_ = JoinGraph::from_query(q, db_);
        query_ = &q;
        Ctx ctx{q.where, 0, {}};
        auto& [cost, node] = best(ctx, graph_.full_mask());
        auto clone = node->clone();
        assign_out_cols(*clone, top_required(q));
        return {cost, std::move(clone)};
    }

  private:
    struct Ctx {
        Predicate preds;
        int depth = 0;
        std::map<uint32_t, std::pair<double, PlanNodePtr>> memo;
    };

    // ---- mask helpers -----------------------------------------------------

    std::vector<std::string> tables_of(uint32_t mask) const {
        std::vector<std::string> out;
        for (size_t i = 0; i < graph_.tables.size(); ++i) {
            if (mask & (1u << i)) out.push_back(graph_.tables[i]);
        }
        return out;
    }

    std::vector<std::pair<ColRef, ColRef>> edges_of(uint32_t mask) const {
        std::vector<std::pair<ColRef, ColRef>> out;
        for (const auto& e : graph_.edges) {
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
        for (auto& [col, iv] : preds.conjuncts()) {
            if (names.count(col.table)) out.constrain(col, iv);
        }
        return out;
    }

    /// Columns of `mask` tables the rest of the query still needs: group keys,
    /// aggregate arguments, selected columns, and endpoints of edges that
    /// leave the mask.
    std::set<ColRef> needed_out(uint32_t mask) const {
        std::set<std::string> names;
        for (auto& t : tables_of(mask)) names.insert(t);
        std::set<ColRef> out;
        auto take = [&](const ColRef& c) {
            if (names.count(c.table)) out.insert(c);
        };
        for (auto& k : query_->group_by) take(k);
        for (auto& a : query_->aggregates) {
            if (!a.arg.column.empty()) take(a.arg);
        }
        for (auto& s : query_->select_list) {
            if (s.kind == OutputItem::Column) take(s.col);
        }
        for (const auto& e : graph_.edges) {
            bool a_in = (mask >> e.a) & 1, b_in = (mask >> e.b) & 1;
            if (a_in && !b_in) out.insert(e.col_a);
            if (!a_in && b_in) out.insert(e.col_b);
        }
        return out;
    }

    /// Fresh build payload: whatever flows upward plus, benefit-oriented, all
    /// selection attributes of the sub-plan (enables later post-filtering).
    std::vector<ColRef> fresh_stored_attrs(uint32_t mask, const ColRef& key) const {
        std::set<ColRef> cols = needed_out(mask);
        cols.insert(key);
        std::set<std::string> names;
        for (auto& t : tables_of(mask)) names.insert(t);
        for (auto& [col, _] : query_->where.conjuncts()) {
            if (names.count(col.table)) cols.insert(col);
        }
        return {cols.begin(), cols.end()};
    }

    BuildDesc join_build_desc(uint32_t mask, const ColRef& key) const {
        BuildDesc d;
        d.kind = HtKind::JoinBuild;
        d.tables = tables_of(mask);
        d.edges = edges_of(mask);
        d.key = key;
        d.canonicalize();
        return d;
    }

    // ---- scans ------------------------------------------------------------

    PlanNodePtr scan_node(const Ctx& ctx, int vertex, double& cost_out) const {
        const std::string& tname = graph_.tables[size_t(vertex)];
        const Table& t = db_.table(tname);
        Predicate slice = slice_of(ctx.preds, 1u << vertex);

        auto node = std::make_unique<PlanNode>();
        node->op = PlanNode::Op::TableScan;
        node->table = tname;
        node->filter = slice;
        node->est_rows = model_.cards().table_rows(tname) * model_.cards().selectivity(tname, slice);

        double row_bytes = 0;
        for (const ColumnDef& c : t.schema().columns) row_bytes += c.byte_width();
        double full_cost = model_.cost_scan(double(t.row_count()), row_bytes);

        // index choice: most selective indexed conjunct, if selective enough
        double best_frac = 0.5;
        for (auto& [col, iv] : slice.conjuncts()) {
            if (!t.has_index(col.column)) continue;
            double frac = model_.cards().interval_fraction(col, iv);
            if (frac < best_frac) {
                best_frac = frac;
                node->index_column = col.column;
            }
        }
        if (node->index_column) {
            cost_out = model_.cost_index_scan(double(t.row_count()) * best_frac, row_bytes, double(t.row_count()));
            if (cost_out >= full_cost) {
                node->index_column.reset();
                cost_out = full_cost;
            }
        } else {
            cost_out = full_cost;
        }
        node->est_cost = cost_out;
        return node;
    }

    // ---- join enumeration ---------------------------------------------------

    const std::pair<double, PlanNodePtr>& best(Ctx& ctx, uint32_t mask) {
        auto found = ctx.memo.find(mask);
        if (found != ctx.memo.end()) return found->second;

        std::pair<double, PlanNodePtr> entry{0, nullptr};
        if (__builtin_popcount(mask) == 1) {
            int v = __builtin_ctz(mask);
            entry.second = scan_node(ctx, v, entry.first);
            return ctx.memo.emplace(mask, std::move(entry)).first->second;
        }

        double best_cost = 0, best_hist = 0;
        PlanNodePtr best_plan;
        for (uint32_t sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
            uint32_t rest = mask ^ sub;  // build side
            if (!graph_.connected(sub) || !graph_.connected(rest)) continue;
            if (!graph_.edge_between(sub, rest)) continue;

            // crossing edges; each may serve as the hash key
            std::vector<std::pair<ColRef, ColRef>> crossing;  // (probe col, build col)
            for (const auto& e : graph_.edges) {
                bool a_sub = (sub >> e.a) & 1, b_sub = (sub >> e.b) & 1;
                bool a_rest = (rest >> e.a) & 1, b_rest = (rest >> e.b) & 1;
                if (a_sub && b_rest) crossing.emplace_back(e.col_a, e.col_b);
                else if (b_sub && a_rest) crossing.emplace_back(e.col_b, e.col_a);
            }
            std::sort(crossing.begin(), crossing.end());
            crossing.erase(std::unique(crossing.begin(), crossing.end()), crossing.end());

            const auto& probe_best = best(ctx, sub);
            double probe_cost = probe_best.first;
            double probe_rows = probe_best.second->est_rows;

            for (size_t kidx = 0; kidx < crossing.size(); ++kidx) {
                const ColRef& probe_col = crossing[kidx].first;
                const ColRef& build_col = crossing[kidx].second;
                std::vector<std::pair<ColRef, ColRef>> residual;
                for (size_t j = 0; j < crossing.size(); ++j) {
                    if (j != kidx) residual.push_back(crossing[j]);
                }

                for (JoinChoice& choice : join_choices(ctx, rest, build_col, probe_rows, probe_col)) {
                    auto node = std::make_unique<PlanNode>();
                    node->op = PlanNode::Op::HashJoin;
                    node->probe = best(ctx, sub).second->clone();
                    node->probe_key = probe_col;
                    node->build_key = build_col;
                    node->residual_edges = residual;
                    node->desc = join_build_desc(rest, build_col);
                    node->content = slice_of(ctx.preds, rest);
                    node->stored_attrs = std::move(choice.stored_attrs);
                    node->reuse = std::move(choice.reuse);
                    node->build = std::move(choice.build_input);
                    node->delta_plans = std::move(choice.delta_plans);
                    node->est_rows = model_.cards().join_rows(tables_of(mask), edges_of(mask), ctx.preds);
                    double cost = probe_cost + choice.cost;
                    node->est_cost = cost;

                    if (trace_ && ctx.depth == 0) {
                        std::string group;
                        for (auto& t : tables_of(mask)) group += t.substr(0, 1);
                        trace_->push_back(TraceEntry{mask, group,
                                                     node->desc.signature() + " " + node->reuse.describe(), cost,
                                                     std::shared_ptr<PlanNode>(node->clone().release())});
                    }

                    double hist = history_ ? history_->score(HistoryStats::signature(
                                                 tables_of(rest), slice_of(ctx.preds, rest)))
                                           : 0.0;
                    if (!best_plan || better(cost, hist, best_cost, best_hist)) {
                        best_cost = cost;
                        best_hist = hist;
                        best_plan = std::move(node);
                    }
                }
            }
        }
        if (!best_plan) throw PlanningError("no connected partition for join subset");
        entry = {best_cost, std::move(best_plan)};
        return ctx.memo.emplace(mask, std::move(entry)).first->second;
    }

    static bool strictly_better(double cost_new, double cost_old) { return cost_new < cost_old; }

    bool better(double cost_new, double hist_new, double cost_old, double hist_old) const {
        if (cost_new < cost_old * (1 - kTieEpsilon)) return true;
        if (cost_new <= cost_old * (1 + kTieEpsilon) && hist_new > hist_old + 1e-12) return true;
        return cost_new < cost_old && hist_new >= hist_old;
    }

    struct JoinChoice {
        ReuseDecision reuse;
        PlanNodePtr build_input;               // fresh builds
        std::vector<PlanNodePtr> delta_plans;  // reuse with missing tuples
        std::vector<ColRef> stored_attrs;
        double cost = 0;  // everything beyond the probe sub-plan's own cost
    };

    /// Candidates for building the hash table over `rest`: cached entries per
    /// the matcher plus a fresh empty table, priced by the reuse-aware model.
    std::vector<JoinChoice> join_choices(Ctx& ctx, uint32_t rest, const ColRef& build_col, double probe_rows,
                                         const ColRef& probe_col) {
        std::vector<JoinChoice> out;
        auto rest_tables = tables_of(rest);
        auto rest_edges = edges_of(rest);
        Predicate slice = slice_of(ctx.preds, rest);
        double probe_ndv = model_.cards().distinct_values(probe_col);

        // fresh candidate (a new empty hash table)
        {
            JoinChoice c;
            c.reuse.fresh = true;
            c.stored_attrs = fresh_stored_attrs(rest, build_col);
            auto geom = fresh_candidate_geometry(8, columns_byte_width(db_, c.stored_attrs), shared_);
            ReuseStats st =
                model_.join_stats(rest_tables, rest_edges, slice, {}, geom, build_col, probe_rows, probe_ndv);
            const auto& input_best = best(ctx, rest);
            c.build_input = input_best.second->clone();
            c.cost = input_best.first + (shared_ ? model_.cost_shared_rhj(st) : model_.cost_rhj(st));
            c.reuse.contr = 0;
            c.reuse.overh = 0;
            out.push_back(std::move(c));
        }

        if (!htm_ || strategy_ == Strategy::NeverShare || ctx.depth >= kMaxDeltaDepth) return out;

        RequestDesc req;
        req.desc = join_build_desc(rest, build_col);
        req.pred = slice;
        auto needed = needed_out(rest);
        needed.insert(build_col);
        req.required_attrs = {needed.begin(), needed.end()};

        std::vector<JoinChoice> cached;
        for (Candidate& cand : htm_->get_candidates(req, shared_)) {
            const CacheEntry& e = htm_->entry(cand.entry_id);
            ReuseStats st = model_.join_stats(rest_tables, rest_edges, slice, e.content, geometry_of(e), build_col,
                                              probe_rows, probe_ndv);
            JoinChoice c;
            c.reuse.fresh = false;
            c.reuse.entry_id = cand.entry_id;
            c.reuse.rewrite = cand.rewrite;
            c.reuse.contr = st.contr;
            c.reuse.overh = st.overh;
            c.stored_attrs = e.stored_attrs;
            double cost = shared_ ? model_.cost_shared_rhj(st) : model_.cost_rhj(st);
            for (const Predicate& box : c.reuse.rewrite.deltas) {
                Ctx delta_ctx{box, ctx.depth + 1, {}};
                const auto& dbest = best(delta_ctx, rest);
                c.delta_plans.push_back(dbest.second->clone());
                cost += dbest.first;
            }
            c.cost = cost;
            cached.push_back(std::move(c));
        }

        if (strategy_ == Strategy::AlwaysShare && !cached.empty()) {
            size_t pick = 0;
            for (size_t i = 1; i < cached.size(); ++i) {
                if (cached[i].reuse.contr > cached[pick].reuse.contr) pick = i;
            }
            out.clear();
            out.push_back(std::move(cached[pick]));
            return out;
        }
        for (auto& c : cached) out.push_back(std::move(c));
        return out;
    }

    // ---- SPJA -------------------------------------------------------------

    PlanNodePtr plan_spja(Ctx& ctx, const QuerySpec& q) {
        BuildDesc desc;
        desc.kind = HtKind::Aggregate;
        desc.tables = q.tables;
        desc.edges = q.join_edges;
        desc.group_keys = q.group_by;
        desc.aggs = q.aggregates;
        desc.canonicalize();

        uint32_t full = graph_.full_mask();
        std::vector<ColRef> key_cols = desc.group_keys;
        uint32_t key_bytes = 0;
        for (const ColRef& k : key_cols) key_bytes += db_.table(k.table).schema().column(k.column).byte_width();
        uint32_t state_bytes = uint32_t(desc.aggs.size() * 8);

        struct AggChoice {
            PlanNodePtr node;
            double cost = 0;
            double contr = 0;
            bool fresh = true;
        };
        std::vector<AggChoice> choices;

        // fresh aggregate over the best join plan
        {
            AggChoice c;
            auto node = std::make_unique<PlanNode>();
            node->op = PlanNode::Op::HashAggregate;
            node->desc = desc;
            node->content = ctx.preds;
            node->group_keys = desc.group_keys;
            node->aggs = desc.aggs;
            node->reuse.fresh = true;
            const auto& join_best = best(ctx, full);
            node->input = join_best.second->clone();
            auto geom = fresh_candidate_geometry(key_bytes, state_bytes, shared_);
            ReuseStats st = model_.aggregate_stats(q.tables, q.join_edges, ctx.preds, key_cols, {}, geom);
            double cost = join_best.first + (shared_ ? model_.cost_shared_rha(st) : model_.cost_rha(st)) +
                          model_.cost_entry_scan(st.projected_entries, geom.t_width);
            node->est_rows = st.projected_entries;
            node->est_cost = cost;
            c.cost = cost;
            c.node = std::move(node);
            choices.push_back(std::move(c));
            if (trace_) {
                trace_->push_back(TraceEntry{full, "AGG", "aggregate fresh", cost,
                                             std::shared_ptr<PlanNode>(choices.back().node->clone().release())});
            }
        }

        if (htm_ && strategy_ != Strategy::NeverShare) {
            RequestDesc req;
            req.desc = desc;
            req.pred = ctx.preds;
            req.required_attrs = key_cols;
            for (Candidate& cand : htm_->get_candidates(req, shared_)) {
                const CacheEntry& e = htm_->entry(cand.entry_id);
                ReuseStats st =
                    model_.aggregate_stats(q.tables, q.join_edges, ctx.preds, key_cols, e.content, geometry_of(e));
                AggChoice c;
                c.fresh = false;
                c.contr = st.contr;
                auto node = std::make_unique<PlanNode>();
                node->op = PlanNode::Op::HashAggregate;
                node->desc = desc;
                node->content = ctx.preds;
                node->group_keys = e.desc.group_keys;
                node->aggs = e.desc.aggs;
                node->reuse.fresh = false;
                node->reuse.entry_id = cand.entry_id;
                node->reuse.rewrite = cand.rewrite;
                node->reuse.contr = st.contr;
                node->reuse.overh = st.overh;
                double cost = (shared_ ? model_.cost_shared_rha(st) : model_.cost_rha(st)) +
                              model_.cost_entry_scan(st.projected_entries, e.table->tuple_width());
                for (const Predicate& box : cand.rewrite.deltas) {
                    Ctx delta_ctx{box, ctx.depth + 1, {}};
                    const auto& dbest = best(delta_ctx, full);
                    node->delta_plans.push_back(dbest.second->clone());
                    cost += dbest.first;
                }
                if (cand.rewrite.post_agg_keys) {
                    cost += st.projected_entries * model_.update_ns(st);
                }
                node->est_rows = st.projected_entries;
                node->est_cost = cost;
                c.cost = cost;
                c.node = std::move(node);
                if (trace_) {
                    trace_->push_back(TraceEntry{full, "AGG", "aggregate " + c.node->reuse.describe(), cost,
                                                 std::shared_ptr<PlanNode>(c.node->clone().release())});
                }
                choices.push_back(std::move(c));
            }
        }

        size_t pick = 0;
        if (strategy_ == Strategy::AlwaysShare) {
            bool any_cached = false;
            double best_contr = -1;
            for (size_t i = 0; i < choices.size(); ++i) {
                if (!choices[i].fresh && choices[i].contr > best_contr) {
                    best_contr = choices[i].contr;
                    pick = i;
                    any_cached = true;
                }
            }
            if (!any_cached) pick = 0;
        } else {
            for (size_t i = 1; i < choices.size(); ++i) {
                if (choices[i].cost < choices[pick].cost) pick = i;
            }
        }
        return std::move(choices[pick].node);
    }

    // ---- output columns -----------------------------------------------------

    std::set<ColRef> top_required(const QuerySpec& q) const {
        std::set<ColRef> req;
        for (auto& o : q.select_list) {
            if (o.kind == OutputItem::Column) req.insert(o.col);
        }
        for (auto& k : q.group_by) req.insert(k);
        for (auto& a : q.aggregates) {
            if (!a.arg.column.empty()) req.insert(a.arg);
        }
        return req;
    }

    /// Propagates required columns down the tree; join build children must
    /// produce the hash table's stored attributes.
    void assign_out_cols(PlanNode& node, std::set<ColRef> required) const {
        switch (node.op) {
            case PlanNode::Op::TableScan: {
                std::set<ColRef> mine;
                for (const ColRef& c : required) {
                    if (c.table == node.table) mine.insert(c);
                }
                node.out_cols = {mine.begin(), mine.end()};
                break;
            }
            case PlanNode::Op::HashJoin: {
                node.out_cols = {required.begin(), required.end()};
                std::set<std::string> build_tables(node.desc.tables.begin(), node.desc.tables.end());
                std::set<ColRef> probe_req;
                for (const ColRef& c : required) {
                    if (!build_tables.count(c.table)) probe_req.insert(c);
                }
                probe_req.insert(node.probe_key);
                for (auto& [p, b] : node.residual_edges) probe_req.insert(p);
                if (node.probe) assign_out_cols(*node.probe, probe_req);
                std::set<ColRef> build_req(node.stored_attrs.begin(), node.stored_attrs.end());
                if (node.build) assign_out_cols(*node.build, build_req);
                for (auto& d : node.delta_plans) assign_out_cols(*d, build_req);
                break;
            }
            case PlanNode::Op::HashAggregate: {
                node.out_cols.clear();
                std::set<ColRef> in_req(node.group_keys.begin(), node.group_keys.end());
                for (const AggSpec& a : node.aggs) {
                    if (!a.arg.column.empty()) in_req.insert(a.arg);
                }
                if (node.input) assign_out_cols(*node.input, in_req);
                for (auto& d : node.delta_plans) assign_out_cols(*d, in_req);
                break;
            }
        }
    }

    const Database& db_;
    HashTableManager* htm_;
    const CostModel& model_;
    Strategy strategy_;
    HistoryStats* history_;
    TraceLog* trace_;
    bool shared_;
    JoinGraph graph_;
    const QuerySpec* query_ = nullptr;
};

}  // namespace reusedb
