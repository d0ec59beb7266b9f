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

#include "reusedb/executor.hpp"
#include "reusedb/optimizer.hpp"
#include "reusedb/parser.hpp"

namespace reusedb {

/// Facade owning the database, the hash table cache, the temp-table cache of
/// the materialized baseline, cost model state, and the reuse history.
class Engine {
  public:
    Engine(Database db, CalibrationTable calib)
        : db_(std::move(db)), calib_(std::move(calib)), model_(db_, calib_) {}

    const Database& db() const { return db_; }
    const CalibrationTable& calibration() const { return calib_; }
    const CostModel& model() const { return model_; }
    HashTableManager& htm() { return htm_; }
    TempTableCache& temp() { return temp_; }
    HistoryStats& history() { return history_; }

    void set_cache_budget(std::optional<size_t> bytes) { htm_.set_budget(bytes); }

    void reset_caches() {
        htm_.clear();
        temp_.clear();
        history_ = HistoryStats{};
    }

    QuerySpec parse(const std::string& text) const { return QueryParser(db_).parse(text); }

    PhysicalPlan plan(const QuerySpec& q, ExecutionMode mode, Strategy strategy = Strategy::CostModel,
                      TraceLog* trace = nullptr) {
        bool reuse_planning = mode == ExecutionMode::HashStashReuse && strategy != Strategy::NeverShare;
        Optimizer opt(db_, reuse_planning ? &htm_ : nullptr, model_, strategy, &history_, trace);
        return opt.plan_query(q);
    }

    std::pair<ResultTable, ExecutionReport> run(const QuerySpec& q, ExecutionMode mode,
                                                Strategy strategy = Strategy::CostModel,
                                                TraceLog* trace = nullptr) {
        PhysicalPlan plan_ = plan(q, mode, strategy, trace);
        return run_plan(plan_, mode);
    }

    std::pair<ResultTable, ExecutionReport> run_plan(PhysicalPlan& plan_, ExecutionMode mode) {
        Executor exec(db_, mode == ExecutionMode::HashStashReuse ? &htm_ : nullptr,
                      mode == ExecutionMode::MaterializedReuse ? &temp_ : nullptr);
        auto out = exec.execute(plan_, mode);
        history_.decay();
        record_history(*plan_.root);
        return out;
    }

    std::pair<ResultTable, ExecutionReport> run_text(const std::string& text, ExecutionMode mode,
                                                     Strategy strategy = Strategy::CostModel) {
        return run(parse(text), mode, strategy);
    }

  private:
    void record_history(const PlanNode& node) {
        if (node.op == PlanNode::Op::HashJoin) {
            history_.record(HistoryStats::signature(node.desc.tables, node.content));
        }
        if (node.build) record_history(*node.build);
        if (node.probe) record_history(*node.probe);
        if (node.input) record_history(*node.input);
        for (const auto& d : node.delta_plans) record_history(*d);
    }

    Database db_;
    CalibrationTable calib_;
    CostModel model_;
    HashTableManager htm_;
    TempTableCache temp_;
    HistoryStats history_;
};

}  // namespace reusedb
