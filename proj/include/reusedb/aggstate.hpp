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

#include "reusedb/query.hpp"

namespace reusedb {

/// Fixed-width aggregate states: one 8-byte slot per function. SUM/MIN/MAX
/// carry the argument's numeric type; COUNT is an int64. AVG never reaches
/// this layer (plans carry it as SUM + COUNT and divide at emit).
class AggStateOps {
  public:
    AggStateOps() = default;

    AggStateOps(const std::vector<AggSpec>& aggs, const Database& db) {
        for (const AggSpec& a : aggs) {
            Slot s;
            s.fn = a.fn;
            if (a.fn == AggFn::Avg || a.fn == AggFn::Median)
                throw PlanningError(std::string(agg_fn_name(a.fn)) + " has no stored state");
            if (!a.arg.column.empty()) {
                ColumnType t = db.table(a.arg.table).schema().column(a.arg.column).type;
                s.real = (t == ColumnType::Float64);
            }
            slots_.push_back(s);
        }
    }

    size_t state_bytes() const { return slots_.size() * 8; }
    size_t slot_count() const { return slots_.size(); }

    /// state := init(first input values); values[i] is the i-th function's arg
    /// (ignored for COUNT).
    void init(uint8_t* state, const std::vector<Value>& values) const {
        for (size_t i = 0; i < slots_.size(); ++i) {
            uint8_t* s = state + i * 8;
            const Slot& slot = slots_[i];
            if (slot.fn == AggFn::Count) {
                int64_t one = 1;
                std::memcpy(s, &one, 8);
            } else if (slot.real) {
                double v = as_real(values[i]);
                std::memcpy(s, &v, 8);
            } else {
                int64_t v = std::get<int64_t>(values[i]);
                std::memcpy(s, &v, 8);
            }
        }
    }

    void fold(uint8_t* state, const std::vector<Value>& values) const {
        for (size_t i = 0; i < slots_.size(); ++i) {
            uint8_t* s = state + i * 8;
            const Slot& slot = slots_[i];
            if (slot.fn == AggFn::Count) {
                int64_t c;
                std::memcpy(&c, s, 8);
                c += 1;
                std::memcpy(s, &c, 8);
            } else if (slot.real) {
                double cur, v = as_real(values[i]);
                std::memcpy(&cur, s, 8);
                cur = combine_real(slot.fn, cur, v);
                std::memcpy(s, &cur, 8);
            } else {
                int64_t cur, v = std::get<int64_t>(values[i]);
                std::memcpy(&cur, s, 8);
                cur = combine_int(slot.fn, cur, v);
                std::memcpy(s, &cur, 8);
            }
        }
    }

    /// Merges another state vector into `state` (post-aggregation over coarser
    /// keys); valid for additive functions only.
    void merge(uint8_t* state, const uint8_t* other) const {
        for (size_t i = 0; i < slots_.size(); ++i) {
            uint8_t* s = state + i * 8;
            const uint8_t* o = other + i * 8;
            const Slot& slot = slots_[i];
            if (slot.fn == AggFn::Count || (!slot.real)) {
                int64_t a, b;
                std::memcpy(&a, s, 8);
                std::memcpy(&b, o, 8);
                a = slot.fn == AggFn::Count ? a + b : combine_int(slot.fn, a, b);
                std::memcpy(s, &a, 8);
            } else {
                double a, b;
                std::memcpy(&a, s, 8);
                std::memcpy(&b, o, 8);
                a = combine_real(slot.fn, a, b);
                std::memcpy(s, &a, 8);
            }
        }
    }

    Value finalize(const uint8_t* state, size_t i) const {
        const Slot& slot = slots_[i];
        const uint8_t* s = state + i * 8;
        if (slot.fn == AggFn::Count || !slot.real) {
            int64_t v;
            std::memcpy(&v, s, 8);
            return v;
        }
        double v;
        std::memcpy(&v, s, 8);
        return v;
    }

  private:
    struct Slot {
        AggFn fn = AggFn::Count;
        bool real = false;
    };

    static double as_real(const Value& v) {
        return v.index() == 1 ? std::get<double>(v) : double(std::get<int64_t>(v));
    }

    static int64_t combine_int(AggFn fn, int64_t a, int64_t b) {
        switch (fn) {
            case AggFn::Sum: return a + b;
            case AggFn::Min: return std::min(a, b);
            case AggFn::Max: return std::max(a, b);
            default: return a + b;
        }
    }

    static double combine_real(AggFn fn, double a, double b) {
        switch (fn) {
            case AggFn::Sum: return a + b;
            case AggFn::Min: return std::min(a, b);
            case AggFn::Max: return std::max(a, b);
            default: return a + b;
        }
    }

    std::vector<Slot> slots_;
};

}  // namespace reusedb
