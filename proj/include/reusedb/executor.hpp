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

#include <chrono>
#include <functional>

#include "reusedb/aggstate.hpp"
#include "reusedb/htm.hpp"
#include "reusedb/layout.hpp"
#include "reusedb/plan.hpp"

namespace reusedb {

enum class ExecutionMode : uint8_t { NoReuse, MaterializedReuse, HashStashReuse };

inline const char* execution_mode_name(ExecutionMode m) {
    switch (m) {
        case ExecutionMode::NoReuse: return "no-reuse";
        case ExecutionMode::MaterializedReuse: return "materialized-reuse";
        default: return "hashstash-reuse";
    }
}

struct ExecutionReport {
    double wall_us = 0;
    std::map<std::string, double> op_times_us;
    size_t rows_emitted = 0;
    size_t bytes_materialized = 0;  // temp-table copies; zero in pipelined modes
    size_t cache_hits = 0;
    size_t cache_misses = 0;
    std::set<std::string> base_tables_touched;
    size_t base_rows_read = 0;
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;

    static std::string sort_key(const std::vector<Value>& row) {
        std::string k;
        for (const Value& v : row) {
            if (v.index() == 1) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.9g", std::get<double>(v));
                k += buf;
            } else {
                k += value_to_string(v);
            }
            k += '\x1f';
        }
        return k;
    }

    void sort_rows() {
        std::sort(rows.begin(), rows.end(),
                  [](const auto& a, const auto& b) { return sort_key(a) < sort_key(b); });
    }

    /// Order-insensitive equality; floats compared with relative tolerance.
    bool equals_multiset(const ResultTable& other, double rel_tol = 1e-9) const {
        if (rows.size() != other.rows.size()) return false;
        ResultTable a = *this, b = other;
        a.sort_rows();
        b.sort_rows();
        for (size_t r = 0; r < a.rows.size(); ++r) {
            if (a.rows[r].size() != b.rows[r].size()) return false;
            for (size_t c = 0; c < a.rows[r].size(); ++c) {
                const Value& x = a.rows[r][c];
                const Value& y = b.rows[r][c];
                if (x.index() == 1 || y.index() == 1) {
                    double dx = x.index() == 1 ? std::get<double>(x) : double(std::get<int64_t>(x));
                    double dy = y.index() == 1 ? std::get<double>(y) : double(std::get<int64_t>(y));
                    double scale = std::max({std::abs(dx), std::abs(dy), 1.0});
                    if (std::abs(dx - dy) > rel_tol * scale) return false;
                } else if (value_to_string(x) != value_to_string(y)) {
                    return false;
                }
            }
        }
        return true;
    }

    void to_csv(std::ostream& os) const {
        for (size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << "\n";
        for (const auto& row : rows) {
            for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << value_to_string(row[i]);
            os << "\n";
        }
    }
};

// ---------------------------------------------------------------------------
// Temp-table cache for the materialization-based baseline. Supports the exact
// and subsuming cases only; stores flat row arrays.
// ---------------------------------------------------------------------------

struct TempTable {
    uint64_t id = 0;
    BuildDesc desc;
    BoxSet content;
    TupleLayout layout;
    std::vector<uint8_t> rows;
    size_t row_count = 0;
    uint64_t last_access = 0;
    size_t hits = 0;
};

class TempTableCache {
  public:
    struct Hit {
        uint64_t id = 0;
        RewriteResult rewrite;
    };

    std::optional<Hit> find(const RequestDesc& req) {
        for (auto& [id, t] : tables_) {
            if (req.desc.kind != t.desc.kind) continue;
            if (req.desc.kind == HtKind::Aggregate) {
                // baseline reuses aggregate outputs only with identical keys/fns
                if (!(t.desc == req.desc)) continue;
            } else {
                if (!(t.desc == req.desc)) continue;
            }
            auto cls = matcher::classify_regions(req.pred, t.content);
            if (!cls || (*cls != ReuseCase::Exact && *cls != ReuseCase::Subsuming)) continue;
            std::vector<ColRef> stored;
            for (const auto& f : t.layout.fields()) stored.push_back(f.col);
            auto rw = matcher::rewrite(req, CachedDesc{t.desc, t.content, stored}, *cls);
            if (!rw) continue;
            t.hits++;
            t.last_access = ++clock_;
            return Hit{id, *rw};
        }
        return std::nullopt;
    }

    TempTable& put(BuildDesc desc, BoxSet content, TupleLayout layout, std::vector<uint8_t> rows, size_t count) {
        // identical lineage replaces the previous spill
        for (auto& [id, t] : tables_) {
            if (t.desc == desc) {
                bytes_ -= t.rows.size();
                t.content = std::move(content);
                t.layout = std::move(layout);
                t.rows = std::move(rows);
                t.row_count = count;
                t.last_access = ++clock_;
                bytes_ += t.rows.size();
                return t;
            }
        }
        TempTable t;
        t.id = next_id_++;
        t.desc = std::move(desc);
        t.content = std::move(content);
        t.layout = std::move(layout);
        t.rows = std::move(rows);
        t.row_count = count;
        t.last_access = ++clock_;
        bytes_ += t.rows.size();
        auto [it, _] = tables_.emplace(t.id, std::move(t));
        return it->second;
    }

    TempTable& table(uint64_t id) { return tables_.at(id); }
    size_t total_bytes() const { return bytes_; }
    size_t count() const { return tables_.size(); }
    void clear() {
        tables_.clear();
        bytes_ = 0;
    }

    double hit_ratio() const {
        if (tables_.empty()) return 0.0;
        size_t h = 0;
        for (auto& [_, t] : tables_) h += t.hits;
        return double(h) / double(tables_.size());
    }

  private:
    std::map<uint64_t, TempTable> tables_;
    uint64_t next_id_ = 1;
    uint64_t clock_ = 0;
    size_t bytes_ = 0;
};

// ---------------------------------------------------------------------------
// Executor
// ---------------------------------------------------------------------------

/// Single-threaded pipelined interpreter for PhysicalPlans. Tuples flow one at
/// a time through scans, probes, and filters; the only materialization points
/// are hash tables at pipeline breakers (plus temp tables in the
/// materialized-reuse baseline, where the copies are the measured overhead).
class Executor {
  public:
    Executor(const Database& db, HashTableManager* htm, TempTableCache* temp)
        : db_(db), htm_(htm), temp_(temp) {}

    std::pair<ResultTable, ExecutionReport> execute(PhysicalPlan& plan, ExecutionMode mode) {
        report_ = ExecutionReport{};
        mode_ = mode;
        auto t0 = Clock::now();
        ResultTable result;
        try {
            result = run_root(plan);
        } catch (...) {
            release_pins(plan);
            throw;  // registers nothing
        }
        if (mode_ == ExecutionMode::HashStashReuse && htm_) register_built(*plan.root);
        release_pins(plan);
        report_.wall_us = us_since(t0);
        report_.rows_emitted = result.rows.size();
        return {std::move(result), report_};
    }

  private:
    using Clock = std::chrono::steady_clock;
    using RowSink = std::function<void(const uint8_t*)>;

    static double us_since(Clock::time_point t0) {
        return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    }

    void release_pins(const PhysicalPlan& plan) {
        if (!htm_) return;
        for (uint64_t id : plan.pin_set) {
            if (htm_->has_entry(id)) htm_->release(id);
        }
    }

    TupleLayout layout_for(const std::vector<ColRef>& cols) const {
        TupleLayout l;
        for (const ColRef& c : cols) {
            const ColumnDef& def = db_.table(c.table).schema().column(c.column);
            l.add(c, def.type, def.byte_width());
        }
        return l;
    }

    // ---- scans -------------------------------------------------------------

    void run_scan(const PlanNode& node, const TupleLayout& out, const RowSink& sink) {
        const Table& t = db_.table(node.table);
        report_.base_tables_touched.insert(node.table);

        std::vector<int> out_idx;
        for (const auto& f : out.fields()) out_idx.push_back(t.schema().column_index(f.col.column));

        // filter bound directly against table columns
        struct Term {
            int col;
            Interval iv;
        };
        std::vector<Term> terms;
        for (auto& [col, iv] : node.filter.conjuncts()) {
            terms.push_back({t.schema().column_index(col.column), iv});
        }

        std::vector<uint8_t> row(out.byte_width());
        auto emit_row = [&](size_t r) {
            for (size_t i = 0; i < out_idx.size(); ++i) out.encode(row.data(), i, t.value(r, size_t(out_idx[i])));
            sink(row.data());
        };

        if (node.filter.is_empty()) return;
        if (node.index_column) {
            Interval iv = node.filter.interval_of(ColRef{node.table, *node.index_column});
            auto rowids = t.index_scan(*node.index_column, iv);
            report_.base_rows_read += rowids.size();
            for (uint32_t r : rowids) {
                bool ok = true;
                for (const Term& term : terms) {
                    if (!term.iv.contains(t.value(r, size_t(term.col)))) {
                        ok = false;
                        break;
                    }
                }
                if (ok) emit_row(r);
            }
        } else {
            size_t n = t.row_count();
            report_.base_rows_read += n;
            for (size_t r = 0; r < n; ++r) {
                bool ok = true;
                for (const Term& term : terms) {
                    if (!term.iv.contains(t.value(r, size_t(term.col)))) {
                        ok = false;
                        break;
                    }
                }
                if (ok) emit_row(r);
            }
        }
    }

    // ---- generic stream ------------------------------------------------------

    /// Streams the node's output rows (laid out per node.out_cols) into sink.
    void run_stream(PlanNode& node, const TupleLayout& out, const RowSink& sink) {
        switch (node.op) {
            case PlanNode::Op::TableScan: run_scan(node, out, sink); break;
            case PlanNode::Op::HashJoin: run_join(node, out, sink); break;
            case PlanNode::Op::HashAggregate:
                throw PlanningError("aggregate cannot stream into another operator in this engine");
        }
    }

    struct JoinTable {
        ReusableHashTable* ht = nullptr;
        std::shared_ptr<ReusableHashTable> owned;
        TupleLayout payload;
        int key_field = 0;  // key position in payload layout
    };

    /// Obtains the build-side hash table: fresh build (with optional temp-table
    /// interception in the baseline mode) or the pinned cached table with
    /// deltas applied.
    JoinTable build_side(PlanNode& node) {
        JoinTable jt;
        jt.payload = layout_for(node.stored_attrs);
        jt.key_field = jt.payload.find(node.build_key);
        if (jt.key_field < 0) throw PlanningError("build key missing from stored attributes");

        if (!node.reuse.fresh) {
            CacheEntry& e = htm_->entry(node.reuse.entry_id);
            jt.ht = e.table.get();
            jt.payload = e.payload_layout;
            jt.key_field = jt.payload.find(node.build_key);
            report_.cache_hits++;
            if (!node.delta_plans.empty()) {
                auto t0 = Clock::now();
                apply_join_deltas(node, e);
                report_.op_times_us["delta"] += us_since(t0);
            }
            return jt;
        }

        report_.cache_misses++;
        auto ht = std::make_shared<ReusableHashTable>(HtKind::JoinBuild, 8, jt.payload.byte_width());
        if (node.build) ht->resize(size_t(std::max(0.0, node.build->est_rows)));
        auto t0 = Clock::now();

        auto insert_row = [&](const uint8_t* row) {
            int64_t key = jt.payload.decode_int(row, size_t(jt.key_field));
            ht->insert({reinterpret_cast<const uint8_t*>(&key), 8}, {row, jt.payload.byte_width()});
        };

        if (mode_ == ExecutionMode::MaterializedReuse && temp_) {
            RequestDesc req;
            req.desc = node.desc;
            req.pred = node.content_pred();
            req.required_attrs = node.stored_attrs;
            if (auto hit = temp_->find(req)) {
                // reuse the spilled input instead of recomputing the subtree
                TempTable& tt = temp_->table(hit->id);
                std::optional<BoundPredicate> post;
                if (hit->rewrite.post_filter) post = BoundPredicate::bind(*hit->rewrite.post_filter, tt.layout);
                const uint8_t* p = tt.rows.data();
                for (size_t r = 0; r < tt.row_count; ++r, p += tt.layout.byte_width()) {
                    if (post && !post->eval(p, tt.layout)) continue;
                    insert_row(p);
                }
                report_.cache_hits++;
                report_.cache_misses--;
            } else {
                std::vector<uint8_t> spill;
                size_t count = 0;
                run_stream(*node.build, jt.payload, [&](const uint8_t* row) {
                    size_t at = spill.size();
                    spill.resize(at + jt.payload.byte_width());
                    std::memcpy(spill.data() + at, row, jt.payload.byte_width());
                    report_.bytes_materialized += jt.payload.byte_width();
                    count++;
                    insert_row(row);
                });
                temp_->put(node.desc, {node.content_pred()}, jt.payload, std::move(spill), count);
            }
        } else {
            run_stream(*node.build, jt.payload, insert_row);
        }
        report_.op_times_us["build"] += us_since(t0);
        jt.owned = std::move(ht);
        jt.ht = jt.owned.get();
        if (mode_ == ExecutionMode::HashStashReuse) node.runtime_table = jt.owned;
        return jt;
    }

    void apply_join_deltas(PlanNode& node, CacheEntry& e) {
        int key_field = e.payload_layout.find(node.build_key);
        for (auto& delta : node.delta_plans) {
            run_stream(*delta, e.payload_layout, [&](const uint8_t* row) {
                int64_t key = e.payload_layout.decode_int(row, size_t(key_field));
                e.table->insert({reinterpret_cast<const uint8_t*>(&key), 8}, {row, e.payload_layout.byte_width()});
            });
        }
        BoxSet content = e.content;
        for (const Predicate& d : node.reuse.rewrite.deltas) content.push_back(d);
        htm_->note_mutation(e.id, std::move(content));
    }

    void run_join(PlanNode& node, const TupleLayout& out, const RowSink& sink) {
        JoinTable jt = build_side(node);

        TupleLayout probe_layout = layout_for(node.probe->out_cols);
        int probe_key = probe_layout.find(node.probe_key);
        if (probe_key < 0) throw PlanningError("probe key missing from probe output");

        // gather maps: out field <- probe row or build payload
        struct Gather {
            bool from_probe;
            uint32_t src_off, dst_off, width;
        };
        std::vector<Gather> gathers;
        for (size_t i = 0; i < out.field_count(); ++i) {
            const auto& f = out.field(i);
            int p = probe_layout.find(f.col);
            if (p >= 0) {
                gathers.push_back({true, probe_layout.field(size_t(p)).offset, f.offset, f.width});
                continue;
            }
            int b = jt.payload.find(f.col);
            if (b < 0) throw PlanningError("join output column " + f.col.str() + " unavailable");
            gathers.push_back({false, jt.payload.field(size_t(b)).offset, f.offset, f.width});
        }

        std::vector<std::pair<int, int>> residuals;  // (probe field, build field)
        for (auto& [pc, bc] : node.residual_edges) {
            residuals.push_back({probe_layout.find(pc), jt.payload.find(bc)});
        }

        std::optional<BoundPredicate> post;
        if (node.reuse.rewrite.post_filter && !node.reuse.rewrite.post_filter->is_true())
            post = BoundPredicate::bind(*node.reuse.rewrite.post_filter, jt.payload);

        std::vector<uint8_t> out_row(out.byte_width());
        auto t0 = Clock::now();
        double* probe_time = &report_.op_times_us["probe"];
        run_stream(*node.probe, probe_layout, [&](const uint8_t* prow) {
            int64_t key = probe_layout.decode_int(prow, size_t(probe_key));
            jt.ht->for_each_match({reinterpret_cast<const uint8_t*>(&key), 8}, [&](uint8_t* payload, uint64_t*) {
                if (post && !post->eval(payload, jt.payload)) return;
                for (auto& [pf, bf] : residuals) {
                    Value a = probe_layout.decode(prow, size_t(pf));
                    Value b = jt.payload.decode(payload, size_t(bf));
                    if (compare_values(a, b) != 0) return;
                }
                for (const Gather& g : gathers) {
                    std::memcpy(out_row.data() + g.dst_off, (g.from_probe ? prow : payload) + g.src_off, g.width);
                }
                sink(out_row.data());
            });
        });
        *probe_time += us_since(t0);
    }

    // ---- aggregates ----------------------------------------------------------

    ResultTable run_root(PhysicalPlan& plan) {
        PlanNode& root = *plan.root;
        ResultTable result;
        for (const auto& o : plan.query.select_list) result.columns.push_back(o.label);

        if (root.op == PlanNode::Op::HashAggregate) {
            run_aggregate(root, plan.query, result);
            return result;
        }

        // pure SPJ: stream and project
        TupleLayout out = layout_for(root.out_cols);
        std::vector<int> fields;
        for (const auto& o : plan.query.select_list) fields.push_back(out.find(o.col));
        run_stream(root, out, [&](const uint8_t* row) {
            std::vector<Value> vals;
            vals.reserve(fields.size());
            for (int f : fields) vals.push_back(out.decode(row, size_t(f)));
            result.rows.push_back(std::move(vals));
        });
        return result;
    }

    struct AggTable {
        ReusableHashTable* ht = nullptr;
        std::shared_ptr<ReusableHashTable> owned;
        TupleLayout keys;
        AggStateOps ops;
        std::vector<AggSpec> fns;
    };

    AggTable aggregate_side(PlanNode& node) {
        AggTable at;
        at.keys = layout_for(node.group_keys);
        at.ops = AggStateOps(node.aggs, db_);
        at.fns = node.aggs;

        if (!node.reuse.fresh) {
            CacheEntry& e = htm_->entry(node.reuse.entry_id);
            at.ht = e.table.get();
            report_.cache_hits++;
            if (!node.delta_plans.empty()) {
                auto t0 = Clock::now();
                apply_agg_deltas(node, e, at);
                report_.op_times_us["delta"] += us_since(t0);
            }
            return at;
        }

        report_.cache_misses++;
        auto ht = std::make_shared<ReusableHashTable>(HtKind::Aggregate, at.keys.byte_width(),
                                                      uint32_t(at.ops.state_bytes()));
        auto t0 = Clock::now();
        if (node.input) {
            TupleLayout in = layout_for(node.input->out_cols);
            fold_stream(*node.input, in, *ht, at);
        }
        report_.op_times_us["aggregate"] += us_since(t0);
        at.owned = std::move(ht);
        at.ht = at.owned.get();
        if (mode_ == ExecutionMode::HashStashReuse) node.runtime_table = at.owned;
        return at;
    }

    void fold_stream(PlanNode& source, const TupleLayout& in, ReusableHashTable& ht, AggTable& at) {
        std::vector<int> key_fields;
        for (const auto& f : at.keys.fields()) key_fields.push_back(in.find(f.col));
        std::vector<int> arg_fields;
        for (const AggSpec& a : at.fns) arg_fields.push_back(a.arg.column.empty() ? -1 : in.find(a.arg));

        std::vector<uint8_t> key(at.keys.byte_width());
        std::vector<Value> values(at.fns.size(), Value(int64_t(0)));
        run_stream(source, in, [&](const uint8_t* row) {
            for (size_t i = 0; i < key_fields.size(); ++i) {
                std::memcpy(key.data() + at.keys.field(i).offset, row + in.field(size_t(key_fields[i])).offset,
                            at.keys.field(i).width);
            }
            for (size_t i = 0; i < arg_fields.size(); ++i) {
                if (arg_fields[i] >= 0) values[i] = in.decode(row, size_t(arg_fields[i]));
            }
            ht.update_aggregate(
                {key.data(), key.size()}, [&](uint8_t* s) { at.ops.init(s, values); },
                [&](uint8_t* s) { at.ops.fold(s, values); });
        });
    }

    void apply_agg_deltas(PlanNode& node, CacheEntry& e, AggTable& at) {
        for (auto& delta : node.delta_plans) {
            TupleLayout in = layout_for(delta->out_cols);
            fold_stream(*delta, in, *e.table, at);
        }
        BoxSet content = e.content;
        for (const Predicate& d : node.reuse.rewrite.deltas) content.push_back(d);
        htm_->note_mutation(e.id, std::move(content));
    }

    void run_aggregate(PlanNode& node, const QuerySpec& q, ResultTable& result) {
        // Materialized baseline: reuse a spilled aggregate output when it
        // matches exactly or subsumes the request.
        if (mode_ == ExecutionMode::MaterializedReuse && temp_) {
            if (emit_from_temp_aggregate(node, q, result)) return;
        }

        AggTable at = aggregate_side(node);

        std::optional<BoundPredicate> post;
        if (node.reuse.rewrite.post_filter && !node.reuse.rewrite.post_filter->is_true())
            post = BoundPredicate::bind(*node.reuse.rewrite.post_filter, at.keys);

        auto t0 = Clock::now();
        // roll-up to a key subset when the rewrite asks for post-aggregation
        AggTable final_side;
        ReusableHashTable* final_ht = at.ht;
        const TupleLayout* final_keys = &at.keys;
        if (node.reuse.rewrite.post_agg_keys) {
            final_side.keys = layout_for(*node.reuse.rewrite.post_agg_keys);
            final_side.ops = at.ops;
            final_side.fns = at.fns;
            final_side.owned = std::make_unique<ReusableHashTable>(HtKind::Aggregate, final_side.keys.byte_width(),
                                                                   uint32_t(at.ops.state_bytes()));
            std::vector<int> sub_fields;
            for (const auto& f : final_side.keys.fields()) sub_fields.push_back(at.keys.find(f.col));
            std::vector<uint8_t> sub_key(final_side.keys.byte_width());
            at.ht->scan_entries([&](const uint8_t* key, const uint8_t* state, uint64_t) {
                if (post && !post->eval(key, at.keys)) return;
                for (size_t i = 0; i < sub_fields.size(); ++i) {
                    std::memcpy(sub_key.data() + final_side.keys.field(i).offset,
                                key + at.keys.field(size_t(sub_fields[i])).offset, final_side.keys.field(i).width);
                }
                final_side.owned->update_aggregate(
                    {sub_key.data(), sub_key.size()},
                    [&](uint8_t* s) { std::memcpy(s, state, at.ops.state_bytes()); },
                    [&](uint8_t* s) { at.ops.merge(s, state); });
            });
            final_ht = final_side.owned.get();
            final_keys = &final_side.keys;
            post.reset();  // already applied during the roll-up pass
        }

        emit_aggregate(node, q, *final_ht, *final_keys, at, post, result);
        report_.op_times_us["emit"] += us_since(t0);

        // Materialized baseline: spill the aggregate output for later reuse.
        if (mode_ == ExecutionMode::MaterializedReuse && temp_) {
            spill_aggregate_output(node, q, *final_ht, *final_keys, at);
        }
    }

    void emit_aggregate(const PlanNode& node, const QuerySpec& q, ReusableHashTable& ht, const TupleLayout& keys,
                        AggTable& at, const std::optional<BoundPredicate>& post, ResultTable& result) {
        // map requested aggregates onto the stored function positions
        std::vector<int> agg_pos(q.aggregates.size(), -1);
        for (size_t i = 0; i < q.aggregates.size(); ++i) {
            for (size_t j = 0; j < at.fns.size(); ++j) {
                if (at.fns[j] == q.aggregates[i]) agg_pos[i] = int(j);
            }
            if (agg_pos[i] < 0) throw PlanningError("aggregate " + q.aggregates[i].str() + " not produced by plan");
        }
        std::vector<int> key_pos;
        for (const auto& o : q.select_list) {
            if (o.kind == OutputItem::Column) key_pos.push_back(keys.find(o.col));
        }

        ht.scan_entries([&](const uint8_t* key, const uint8_t* state, uint64_t) {
            if (post && !post->eval(key, keys)) return;
            std::vector<Value> row;
            row.reserve(q.select_list.size());
            size_t kp = 0;
            for (const auto& o : q.select_list) {
                switch (o.kind) {
                    case OutputItem::Column: row.push_back(keys.decode(key, size_t(key_pos[kp++]))); break;
                    case OutputItem::Aggregate:
                        row.push_back(at.ops.finalize(state, size_t(agg_pos[o.agg_index])));
                        break;
                    case OutputItem::AvgOf: {
                        Value sum = at.ops.finalize(state, size_t(agg_pos[o.sum_index]));
                        Value cnt = at.ops.finalize(state, size_t(agg_pos[o.count_index]));
                        double s = sum.index() == 1 ? std::get<double>(sum) : double(std::get<int64_t>(sum));
                        row.push_back(s / double(std::get<int64_t>(cnt)));
                        break;
                    }
                }
            }
            result.rows.push_back(std::move(row));
        });
    }

    // ---- materialized aggregate spill/reuse -----------------------------------

    TupleLayout temp_agg_layout(const PlanNode& node, const AggTable& at) const {
        TupleLayout l = layout_for(node.group_keys);
        for (size_t i = 0; i < at.fns.size(); ++i) {
            bool real = false;
            if (!at.fns[i].arg.column.empty())
                real = db_.table(at.fns[i].arg.table).schema().column(at.fns[i].arg.column).type ==
                       ColumnType::Float64;
            if (at.fns[i].fn == AggFn::Count) real = false;
            l.add(ColRef{"", "agg" + std::to_string(i)}, real ? ColumnType::Float64 : ColumnType::Int64, 8);
        }
        return l;
    }

    bool emit_from_temp_aggregate(const PlanNode& node, const QuerySpec& q, ResultTable& result) {
        if (node.reuse.rewrite.post_agg_keys) return false;  // baseline: exact keys only
        RequestDesc req;
        req.desc = node.desc;
        req.pred = node.content_pred();
        req.required_attrs = node.group_keys;
        auto hit = temp_->find(req);
        if (!hit) return false;
        TempTable& tt = temp_->table(hit->id);
        std::optional<BoundPredicate> post;
        if (hit->rewrite.post_filter) post = BoundPredicate::bind(*hit->rewrite.post_filter, tt.layout);

        std::vector<int> key_pos;
        for (const auto& o : q.select_list) {
            if (o.kind == OutputItem::Column) key_pos.push_back(tt.layout.find(o.col));
        }
        std::vector<int> agg_field(node.aggs.size());
        for (size_t i = 0; i < node.aggs.size(); ++i)
            agg_field[i] = tt.layout.find(ColRef{"", "agg" + std::to_string(i)});
        std::vector<int> agg_pos(q.aggregates.size(), -1);
        for (size_t i = 0; i < q.aggregates.size(); ++i) {
            for (size_t j = 0; j < node.aggs.size(); ++j) {
                if (node.aggs[j] == q.aggregates[i]) agg_pos[i] = int(j);
            }
            if (agg_pos[i] < 0) return false;
        }

        const uint8_t* p = tt.rows.data();
        for (size_t r = 0; r < tt.row_count; ++r, p += tt.layout.byte_width()) {
            if (post && !post->eval(p, tt.layout)) continue;
            std::vector<Value> row;
            size_t kp = 0;
            for (const auto& o : q.select_list) {
                switch (o.kind) {
                    case OutputItem::Column: row.push_back(tt.layout.decode(p, size_t(key_pos[kp++]))); break;
                    case OutputItem::Aggregate:
                        row.push_back(tt.layout.decode(p, size_t(agg_field[size_t(agg_pos[o.agg_index])])));
                        break;
                    case OutputItem::AvgOf: {
                        Value sum = tt.layout.decode(p, size_t(agg_field[size_t(agg_pos[o.sum_index])]));
                        Value cnt = tt.layout.decode(p, size_t(agg_field[size_t(agg_pos[o.count_index])]));
                        double s = sum.index() == 1 ? std::get<double>(sum) : double(std::get<int64_t>(sum));
                        row.push_back(s / double(std::get<int64_t>(cnt)));
                        break;
                    }
                }
            }
            result.rows.push_back(std::move(row));
        }
        report_.cache_hits++;
        return true;
    }

    void spill_aggregate_output(const PlanNode& node, const QuerySpec& q, ReusableHashTable& ht,
                                const TupleLayout& keys, AggTable& at) {
        (void)q;
        if (node.reuse.rewrite.post_agg_keys) return;
        TupleLayout layout = temp_agg_layout(node, at);
        std::vector<uint8_t> rows;
        size_t count = 0;
        std::vector<uint8_t> row(layout.byte_width());
        std::vector<int> key_fields;
        for (const auto& f : keys.fields()) key_fields.push_back(layout.find(f.col));
        ht.scan_entries([&](const uint8_t* key, const uint8_t* state, uint64_t) {
            for (size_t i = 0; i < key_fields.size(); ++i) {
                std::memcpy(row.data() + layout.field(size_t(key_fields[i])).offset, key + keys.field(i).offset,
                            keys.field(i).width);
            }
            for (size_t i = 0; i < at.fns.size(); ++i) {
                layout.encode(row.data(), keys.fields().size() + i, at.ops.finalize(state, i));
            }
            size_t att = rows.size();
            rows.resize(att + row.size());
            std::memcpy(rows.data() + att, row.data(), row.size());
            report_.bytes_materialized += row.size();
            count++;
        });
        temp_->put(node.desc, {node.content_pred()}, layout, std::move(rows), count);
    }

    // ---- registration ---------------------------------------------------------

    LineagePlan lineage_of(const PlanNode& node) const {
        LineagePlan plan;
        plan.desc = node.desc;
        for (const std::string& t : node.desc.tables) {
            BuildDesc scan;
            scan.tables = {t};
            plan.children.push_back(LineagePlan{scan, {}});
        }
        return plan;
    }

    /// After a successful run, newly built hash tables enter the cache. Reused
    /// tables were updated through note_mutation already.
    void register_built(PlanNode& node) {
        if (node.probe) register_built(*node.probe);
        if (node.build) register_built(*node.build);
        if (node.input) register_built(*node.input);
        for (auto& d : node.delta_plans) register_built(*d);
        if (node.op == PlanNode::Op::TableScan) return;
        if (!node.reuse.fresh) return;
        if (!node.runtime_table) return;
        try {
            if (node.op == PlanNode::Op::HashJoin) {
                TupleLayout payload = layout_for(node.stored_attrs);
                TupleLayout keyl = layout_for({node.build_key});
                htm_->register_table(std::move(node.runtime_table), lineage_of(node), {node.content_pred()},
                                     node.stored_attrs, keyl, payload);
            } else {
                TupleLayout keyl = layout_for(node.group_keys);
                htm_->register_table(std::move(node.runtime_table), lineage_of(node), {node.content_pred()},
                                     node.group_keys, keyl, TupleLayout{});
            }
        } catch (const AdmissionRefused&) {
            // cache full of pinned tables: skip caching, the query still succeeded
        }
        node.runtime_table.reset();
    }

    const Database& db_;
    HashTableManager* htm_;
    TempTableCache* temp_;
    ExecutionMode mode_ = ExecutionMode::NoReuse;
    ExecutionReport report_;
};

}  // namespace reusedb
