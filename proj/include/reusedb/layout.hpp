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
#include <span>
#include <string>
#include <vector>

#include "reusedb/predicate.hpp"
#include "reusedb/schema.hpp"

namespace reusedb {

/// Fixed-width row layout: an ordered list of qualified columns with byte
/// offsets. Rows encoded under a layout are the unit stored in hash tables and
/// streamed between operators.
class TupleLayout {
  public:
    struct Field {
        ColRef col;
        ColumnType type = ColumnType::Int64;
        uint32_t width = 8;
        uint32_t offset = 0;
    };

    void add(ColRef col, ColumnType type, uint32_t width) {
        if (find(col) >= 0) return;
        Field f;
        f.col = std::move(col);
        f.type = type;
        f.width = (type == ColumnType::FixedStr) ? width : (type == ColumnType::Date32 ? 4 : 8);
        f.offset = bytes_;
        bytes_ += f.width;
        fields_.push_back(std::move(f));
    }

    int find(const ColRef& col) const {
        for (size_t i = 0; i < fields_.size(); ++i) {
            if (fields_[i].col == col) return int(i);
        }
        return -1;
    }

    const Field& field(size_t i) const { return fields_[i]; }
    const std::vector<Field>& fields() const { return fields_; }
    size_t field_count() const { return fields_.size(); }
    uint32_t byte_width() const { return bytes_; }

    void encode(uint8_t* row, size_t i, const Value& v) const {
        const Field& f = fields_[i];
        uint8_t* dst = row + f.offset;
        switch (f.type) {
            case ColumnType::Int64: {
                int64_t x = std::get<int64_t>(v);
                std::memcpy(dst, &x, 8);
                break;
            }
            case ColumnType::Float64: {
                double x = std::get<double>(v);
                std::memcpy(dst, &x, 8);
                break;
            }
            case ColumnType::Date32: {
                int32_t x = int32_t(std::get<int64_t>(v));
                std::memcpy(dst, &x, 4);
                break;
            }
            default: {
                const auto& s = std::get<std::string>(v);
                std::memset(dst, 0, f.width);
                std::memcpy(dst, s.data(), std::min<size_t>(s.size(), f.width));
            }
        }
    }

    Value decode(const uint8_t* row, size_t i) const {
        const Field& f = fields_[i];
        const uint8_t* src = row + f.offset;
        switch (f.type) {
            case ColumnType::Int64: {
                int64_t x;
                std::memcpy(&x, src, 8);
                return x;
            }
            case ColumnType::Float64: {
                double x;
                std::memcpy(&x, src, 8);
                return x;
            }
            case ColumnType::Date32: {
                int32_t x;
                std::memcpy(&x, src, 4);
                return int64_t(x);
            }
            default: {
                const char* p = reinterpret_cast<const char*>(src);
                size_t len = 0;
                while (len < f.width && p[len] != '\0') len++;
                return std::string(p, len);
            }
        }
    }

    /// Numeric field as int64 (Int64 or Date32); used for join keys.
    int64_t decode_int(const uint8_t* row, size_t i) const {
        const Field& f = fields_[i];
        if (f.type == ColumnType::Int64) {
            int64_t x;
            std::memcpy(&x, row + f.offset, 8);
            return x;
        }
        if (f.type == ColumnType::Date32) {
            int32_t x;
            std::memcpy(&x, row + f.offset, 4);
            return x;
        }
        throw LayoutError("field " + f.col.str() + " is not integer-typed");
    }

    /// Copies the fields present in `src` (under `from`) into `row`; every
    /// field of this layout must exist in `from`.
    void gather(uint8_t* row, const TupleLayout& from, const uint8_t* src) const {
        for (size_t i = 0; i < fields_.size(); ++i) {
            int j = from.find(fields_[i].col);
            if (j < 0) throw AttributeUnavailable("layout gather missing " + fields_[i].col.str());
            std::memcpy(row + fields_[i].offset, src + from.fields_[size_t(j)].offset, fields_[i].width);
        }
    }

    std::string signature() const {
        std::string s;
        for (const Field& f : fields_) {
            s += f.col.str();
            s += ':';
            s += column_type_name(f.type);
            s += ';';
        }
        return s;
    }

    bool operator==(const TupleLayout& o) const { return signature() == o.signature(); }

  private:
    std::vector<Field> fields_;
    uint32_t bytes_ = 0;
};

/// Predicate compiled against a layout for per-row evaluation without name
/// lookups. Binding fails with AttributeUnavailable when the layout lacks a
/// constrained column.
class BoundPredicate {
  public:
    static BoundPredicate bind(const Predicate& p, const TupleLayout& layout) {
        BoundPredicate bp;
        bp.unsat_ = p.is_empty();
        for (auto& [col, iv] : p.conjuncts()) {
            int i = layout.find(col);
            if (i < 0) throw AttributeUnavailable("predicate column " + col.str() + " not in layout");
            Term t;
            t.field = i;
            t.type = layout.field(size_t(i)).type;
            if (t.type == ColumnType::Int64 || t.type == ColumnType::Date32) {
                t.ilo = iv.has_lo() ? std::get<int64_t>(iv.lo()) : INT64_MIN;
                t.ihi = iv.has_hi() ? std::get<int64_t>(iv.hi()) : INT64_MAX;
            } else {
                t.iv = iv;
            }
            bp.terms_.push_back(std::move(t));
        }
        return bp;
    }

    bool eval(const uint8_t* row, const TupleLayout& layout) const {
        if (unsat_) return false;
        for (const Term& t : terms_) {
            if (t.type == ColumnType::Int64 || t.type == ColumnType::Date32) {
                int64_t v = layout.decode_int(row, size_t(t.field));
                if (v < t.ilo || v > t.ihi) return false;
            } else {
                if (!t.iv.contains(layout.decode(row, size_t(t.field)))) return false;
            }
        }
        return true;
    }

    bool always_true() const { return !unsat_ && terms_.empty(); }

  private:
    struct Term {
        int field = 0;
        ColumnType type = ColumnType::Int64;
        int64_t ilo = INT64_MIN, ihi = INT64_MAX;  // integer fast path (canonical closed bounds)
        Interval iv;                               // float / string path
    };

    std::vector<Term> terms_;
    bool unsat_ = false;
};

}  // namespace reusedb
