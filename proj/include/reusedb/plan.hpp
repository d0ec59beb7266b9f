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

#include <memory>
#include <optional>
#include <set>

#include "reusedb/matcher.hpp"
#include "reusedb/query.hpp"

namespace reusedb {

/// How a hash-building operator obtains its table: a fresh build, or one of
/// the four reuse cases over a cached entry.
struct ReuseDecision {
    bool fresh = true;
    uint64_t entry_id = 0;
    RewriteResult rewrite;
    double contr = 0;
    double overh = 0;

    std::string describe() const {
        if (fresh) return "fresh";
        return "reuse#" + std::to_string(entry_id) + " " + rewrite.describe();
    }
};

struct PlanNode;
using PlanNodePtr = std::unique_ptr<PlanNode>;

/// Operator tree interpreted by the executor. TableScan leaves stream base
/// rows; HashJoin builds (or adopts) a hash table from its build side and
/// probes with the other; HashAggregate is the block's pipeline breaker.
struct PlanNode {
    enum class Op { TableScan, HashJoin, HashAggregate } op = Op::TableScan;

    // --- TableScan
    std::string table;
    Predicate filter;
    std::optional<std::string> index_column;  // use the secondary index on this column

    // --- HashJoin
    PlanNodePtr build;  // input producing build rows; null when reuse eliminates it
    PlanNodePtr probe;
    ColRef build_key, probe_key;
    std::vector<std::pair<ColRef, ColRef>> residual_edges;  // (probe col, build col)
    std::vector<ColRef> stored_attrs;                       // hash table payload columns

    // --- HashAggregate
    PlanNodePtr input;  // null when aggregate reuse eliminates the join
    std::vector<ColRef> group_keys;  // keys of the table built/reused (canonical order)
    std::vector<AggSpec> aggs;

    // --- reuse (HashJoin: the build side; HashAggregate: the state table)
    ReuseDecision reuse;
    std::vector<PlanNodePtr> delta_plans;  // one per disjoint delta box

    // --- common
    std::vector<ColRef> out_cols;  // columns this node streams upward
    BuildDesc desc;                // lineage descriptor (join build side / aggregate)
    Predicate content;             // region a fresh build materializes (registration/spill)
    double est_cost = 0;
    double est_rows = 0;

    // Execution state: a freshly built table kept alive until registration.
    std::shared_ptr<ReusableHashTable> runtime_table;

    const Predicate& content_pred() const { return content; }

    PlanNodePtr clone() const {
        auto n = std::make_unique<PlanNode>();
        n->op = op;
        n->table = table;
        n->filter = filter;
        n->index_column = index_column;
        if (build) n->build = build->clone();
        if (probe) n->probe = probe->clone();
        n->build_key = build_key;
        n->probe_key = probe_key;
        n->residual_edges = residual_edges;
        n->stored_attrs = stored_attrs;
        if (input) n->input = input->clone();
        n->group_keys = group_keys;
        n->aggs = aggs;
        n->reuse = reuse;
        for (const auto& d : delta_plans) n->delta_plans.push_back(d->clone());
        n->out_cols = out_cols;
        n->desc = desc;
        n->content = content;
        n->est_cost = est_cost;
        n->est_rows = est_rows;
        return n;
    }

    void collect_entries(std::set<uint64_t>& ids) const {
        if (!reuse.fresh) ids.insert(reuse.entry_id);
        if (build) build->collect_entries(ids);
        if (probe) probe->collect_entries(ids);
        if (input) input->collect_entries(ids);
        for (const auto& d : delta_plans) d->collect_entries(ids);
    }

    std::string describe(int indent = 0) const {
        std::string pad(size_t(indent) * 2, ' ');
        std::string s;
        switch (op) {
            case Op::TableScan:
                s = pad + (index_column ? "IndexScan(" + *index_column + ") " : "Scan ") + table + " [" +
                    filter.str() + "]\n";
                break;
            case Op::HashJoin:
                s = pad + "HashJoin " + probe_key.str() + " = " + build_key.str() + " build=" + reuse.describe() +
                    "\n";
                if (probe) s += probe->describe(indent + 1);
                if (build) s += build->describe(indent + 1);
                for (const auto& d : delta_plans) s += pad + "  delta:\n" + d->describe(indent + 2);
                break;
            case Op::HashAggregate:
                s = pad + "HashAggregate keys=[";
                for (auto& k : group_keys) s += k.str() + " ";
                s += "] fns=[";
                for (auto& a : aggs) s += a.str() + " ";
                s += "] " + reuse.describe() + "\n";
                if (input) s += input->describe(indent + 1);
                for (const auto& d : delta_plans) s += pad + "  delta:\n" + d->describe(indent + 2);
                break;
        }
        return s;
    }
};

/// A complete reuse-aware execution plan for one query block.
struct PhysicalPlan {
    PlanNodePtr root;
    QuerySpec query;
    std::set<uint64_t> pin_set;  // entries pinned by the optimizer before returning
    double est_cost = 0;

    std::string describe() const { return root ? root->describe() : "<empty>"; }
};

}  // namespace reusedb
