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
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "reusedb/predicate.hpp"
#include "reusedb/schema.hpp"

namespace reusedb {

struct RowRef {
    std::string table;
    uint32_t row = 0;
};

namespace detail {

struct ColumnData {
    ColumnType type = ColumnType::Int64;
    uint32_t width = 8;
    std::vector<int64_t> ints;
    std::vector<double> reals;
    std::vector<int32_t> dates;
    std::vector<char> chars;  // FixedStr, stride = width

    size_t size() const {
        switch (type) {
            case ColumnType::Int64: return ints.size();
            case ColumnType::Float64: return reals.size();
            case ColumnType::Date32: return dates.size();
            default: return width ? chars.size() / width : 0;
        }
    }

    Value get(size_t row) const {
        switch (type) {
            case ColumnType::Int64: return ints[row];
            case ColumnType::Float64: return reals[row];
            case ColumnType::Date32: return int64_t(dates[row]);
            default: {
                const char* p = chars.data() + row * width;
                size_t len = 0;
                while (len < width && p[len] != '\0') len++;
                return std::string(p, len);
            }
        }
    }

    void append(const Value& v) {
        switch (type) {
            case ColumnType::Int64: ints.push_back(std::get<int64_t>(v)); break;
            case ColumnType::Float64: reals.push_back(std::get<double>(v)); break;
            case ColumnType::Date32: dates.push_back(int32_t(std::get<int64_t>(v))); break;
            default: {
                const auto& s = std::get<std::string>(v);
                if (s.size() > width) throw LayoutError("string wider than column width");
                size_t at = chars.size();
                chars.resize(at + width, '\0');
                std::copy(s.begin(), s.end(), chars.begin() + at);
            }
        }
    }
};

}  // namespace detail

/// Sorted (value, row id) secondary index over one column.
class SortedIndex {
  public:
    void build(const detail::ColumnData& col) {
        numeric_ = col.type != ColumnType::FixedStr;
        real_ = col.type == ColumnType::Float64;
        nums_.clear();
        strs_.clear();
        size_t n = col.size();
        if (col.type == ColumnType::FixedStr) {
            strs_.reserve(n);
            for (size_t r = 0; r < n; ++r) strs_.emplace_back(std::get<std::string>(col.get(r)), uint32_t(r));
            std::sort(strs_.begin(), strs_.end());
        } else {
            nums_.reserve(n);
            for (size_t r = 0; r < n; ++r) {
                double key;
                if (col.type == ColumnType::Float64) key = col.reals[r];
                else if (col.type == ColumnType::Date32) key = double(col.dates[r]);
                else key = double(col.ints[r]);
                nums_.emplace_back(key, uint32_t(r));
            }
            std::sort(nums_.begin(), nums_.end());
        }
    }

    /// Row ids whose value lies in the interval, ascending row id.
    std::vector<uint32_t> lookup(const Interval& iv) const {
        std::vector<uint32_t> out;
        if (iv.is_empty()) return out;
        if (!numeric_) {
            for (auto& [v, r] : strs_) {
                if (iv.contains(Value(v))) out.push_back(r);
            }
        } else {
            auto lo = nums_.begin();
            auto hi = nums_.end();
            if (iv.has_lo()) {
                double b = numeric_bound(iv.lo());
                lo = std::lower_bound(nums_.begin(), nums_.end(), b,
                                      [](const auto& p, double x) { return p.first < x; });
                if (!iv.lo_inclusive()) {
                    while (lo != nums_.end() && lo->first == b) ++lo;
                }
            }
            if (iv.has_hi()) {
                double b = numeric_bound(iv.hi());
                hi = std::upper_bound(lo, nums_.end(), b,
                                      [](double x, const auto& p) { return x < p.first; });
                if (!iv.hi_inclusive()) {
                    while (hi != lo && (hi - 1)->first == b) --hi;
                }
            }
            out.reserve(size_t(hi - lo));
            for (auto it = lo; it != hi; ++it) out.push_back(it->second);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    size_t size() const { return numeric_ ? nums_.size() : strs_.size(); }

  private:
    static double numeric_bound(const Value& v) {
        return v.index() == 0 ? double(std::get<int64_t>(v)) : std::get<double>(v);
    }

    bool numeric_ = true;
    bool real_ = false;
    std::vector<std::pair<double, uint32_t>> nums_;
    std::vector<std::pair<std::string, uint32_t>> strs_;
};

struct ColumnStats {
    Value min{int64_t(0)};
    Value max{int64_t(0)};
    double distinct = 0;
};

/// Column-oriented immutable base table. Loaded once, then read-only.
class Table {
  public:
    Table() = default;
    explicit Table(Schema schema) : schema_(std::move(schema)) {
        schema_.validate();
        cols_.resize(schema_.columns.size());
        for (size_t i = 0; i < cols_.size(); ++i) {
            cols_[i].type = schema_.columns[i].type;
            cols_[i].width = schema_.columns[i].byte_width();
        }
    }

    const Schema& schema() const { return schema_; }
    const std::string& name() const { return schema_.table; }
    size_t row_count() const { return rows_; }

    void append_row(const std::vector<Value>& vals) {
        if (vals.size() != cols_.size()) throw LayoutError("row arity mismatch for " + name());
        for (size_t i = 0; i < cols_.size(); ++i) cols_[i].append(vals[i]);
        rows_++;
    }

    Value value(size_t row, size_t col) const { return cols_[col].get(row); }

    Value value(size_t row, const std::string& col) const {
        int i = schema_.column_index(col);
        if (i < 0) throw SchemaError("unknown column " + name() + "." + col);
        return cols_[size_t(i)].get(row);
    }

    const detail::ColumnData& column_data(size_t col) const { return cols_[col]; }

    /// Builds secondary indexes for the given columns and per-column stats.
    void finalize(const std::vector<std::string>& indexed_columns = {}) {
        compute_stats();
        for (const auto& c : indexed_columns) build_index(c);
    }

    void build_index(const std::string& col) {
        int i = schema_.column_index(col);
        if (i < 0) throw SchemaError("cannot index unknown column " + name() + "." + col);
        indexes_[col].build(cols_[size_t(i)]);
    }

    bool has_index(const std::string& col) const { return indexes_.count(col) > 0; }

    const std::map<std::string, SortedIndex>& indexes() const { return indexes_; }

    /// Exactly the rows whose value lies in the interval. The caller must have
    /// checked has_index; a missing index signals a planner bug.
    std::vector<uint32_t> index_scan(const std::string& col, const Interval& iv) const {
        auto it = indexes_.find(col);
        if (it == indexes_.end()) throw PlanningError("index_scan on unindexed column " + name() + "." + col);
        return it->second.lookup(iv);
    }

    /// Row ids satisfying the predicate, ascending. The predicate must only
    /// reference columns of this table.
    std::vector<uint32_t> scan_rowids(const Predicate& pred) const {
        std::vector<int> bound;
        std::vector<const Interval*> ivs;
        for (auto& [col, iv] : pred.conjuncts()) {
            if (col.table != name()) throw SchemaError("predicate column " + col.str() + " not in " + name());
            int i = schema_.column_index(col.column);
            if (i < 0) throw SchemaError("unknown column " + col.str());
            bound.push_back(i);
            ivs.push_back(&iv);
        }
        std::vector<uint32_t> out;
        if (pred.is_empty()) return out;
        for (size_t r = 0; r < rows_; ++r) {
            bool ok = true;
            for (size_t k = 0; k < bound.size(); ++k) {
                if (!ivs[k]->contains(cols_[size_t(bound[k])].get(r))) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.push_back(uint32_t(r));
        }
        return out;
    }

    /// Projected scan, ascending row id, one callback per qualifying row.
    template <typename Fn>
    void scan(const Predicate& pred, const std::vector<std::string>& projection, Fn&& fn) const {
        std::vector<int> proj;
        proj.reserve(projection.size());
        for (const auto& c : projection) {
            int i = schema_.column_index(c);
            if (i < 0) throw SchemaError("unknown column " + name() + "." + c);
            proj.push_back(i);
        }
        for (uint32_t r : scan_rowids(pred)) {
            std::vector<Value> row;
            row.reserve(proj.size());
            for (int i : proj) row.push_back(cols_[size_t(i)].get(r));
            fn(r, row);
        }
    }

    const ColumnStats& stats(const std::string& col) const {
        int i = schema_.column_index(col);
        if (i < 0) throw SchemaError("unknown column " + name() + "." + col);
        return stats_[size_t(i)];
    }

    void export_csv(std::ostream& os) const {
        for (size_t i = 0; i < schema_.columns.size(); ++i) os << (i ? "," : "") << schema_.columns[i].name;
        os << "\n";
        for (size_t r = 0; r < rows_; ++r) {
            for (size_t i = 0; i < cols_.size(); ++i) {
                if (i) os << ",";
                if (cols_[i].type == ColumnType::Date32) os << format_date(cols_[i].dates[r]);
                else os << value_to_string(cols_[i].get(r));
            }
            os << "\n";
        }
    }

    static Table import_csv(Schema schema, std::istream& is) {
        Table t(std::move(schema));
        std::string line;
        if (!std::getline(is, line)) throw SchemaError("csv missing header");
        std::vector<std::string> header = split_csv_line(line);
        std::vector<int> order;
        for (auto& h : header) {
            int i = t.schema_.column_index(h);
            if (i < 0) throw SchemaError("csv header column " + h + " not in schema " + t.name());
            order.push_back(i);
        }
        if (order.size() != t.schema_.columns.size()) throw SchemaError("csv header arity mismatch");
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<std::string> fields = split_csv_line(line);
            if (fields.size() != order.size()) throw SchemaError("csv row arity mismatch");
            std::vector<Value> row(order.size());
            for (size_t k = 0; k < fields.size(); ++k) {
                const ColumnDef& def = t.schema_.columns[size_t(order[k])];
                row[size_t(order[k])] = parse_field(fields[k], def.type);
            }
            t.append_row(row);
        }
        return t;
    }

  private:
    static std::vector<std::string> split_csv_line(const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur += ch;
            }
        }
        out.push_back(cur);
        return out;
    }

    static Value parse_field(const std::string& s, ColumnType t) {
        switch (t) {
            case ColumnType::Int64: return int64_t(std::stoll(s));
            case ColumnType::Float64: return std::stod(s);
            case ColumnType::Date32: {
                auto d = parse_date(s);
                if (!d) return int64_t(std::stoll(s));
                return *d;
            }
            default: return s;
        }
    }

    void compute_stats() {
        stats_.assign(cols_.size(), ColumnStats{});
        for (size_t i = 0; i < cols_.size(); ++i) {
            ColumnStats st;
            if (rows_ == 0) {
                stats_[i] = st;
                continue;
            }
            st.min = cols_[i].get(0);
            st.max = st.min;
            std::unordered_set<std::string> distinct;
            for (size_t r = 0; r < rows_; ++r) {
                Value v = cols_[i].get(r);
                if (compare_values(v, st.min) < 0) st.min = v;
                if (compare_values(v, st.max) > 0) st.max = v;
                distinct.insert(value_to_string(v));
            }
            st.distinct = double(distinct.size());
            stats_[i] = st;
        }
    }

    Schema schema_;
    std::vector<detail::ColumnData> cols_;
    size_t rows_ = 0;
    std::map<std::string, SortedIndex> indexes_;
    std::vector<ColumnStats> stats_;
};

/// Named collection of base tables.
class Database {
  public:
    void add(Table t) { tables_.emplace(t.name(), std::move(t)); }

    const Table& table(const std::string& name) const {
        auto it = tables_.find(name);
        if (it == tables_.end()) throw SchemaError("unknown table " + name);
        return it->second;
    }

    Table& table_mut(const std::string& name) {
        auto it = tables_.find(name);
        if (it == tables_.end()) throw SchemaError("unknown table " + name);
        return it->second;
    }

    bool has_table(const std::string& name) const { return tables_.count(name) > 0; }

    const std::map<std::string, Table>& tables() const { return tables_; }

  private:
    std::map<std::string, Table> tables_;
};

}  // namespace reusedb
