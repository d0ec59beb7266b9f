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

#include <cmath>

#include "reusedb/calibration.hpp"
#include "reusedb/matcher.hpp"
#include "reusedb/query.hpp"

namespace reusedb {

struct NotShareable : EngineError {
    using EngineError::EngineError;
};

/// Inputs of the reuse-aware cost formulas for one (candidate, request) pair.
/// Fresh builds are the degenerate candidate with contr = 0 and overh = 0.
struct ReuseStats {
    double contr = 0;               // fraction of required data already cached
    double overh = 0;               // fraction of cached entries not required
    double builder = 0;             // |Builder|: rows required in the table
    double prober = 0;              // |Prober|
    double input = 0;               // |Input| (aggregate case)
    double distinct_keys = 0;       // |distinct(Input.key)| (aggregate case)
    double entry_count = 0;         // entries currently cached
    double projected_entries = 0;   // entries after missing data is added
    double projected_ht_bytes = 0;  // htSize after reuse (resized)
    double dir_growth_bytes = 0;    // directory bytes the resize allocates
    double est_probe_matches = 0;   // probe hits incl. false positives
    double retag_entries = 0;       // entries to retag (shared plans)
    uint32_t t_width = 8;
    bool taggable = false;
};

/// Uniform per-column selectivity with cross-column independence and exact
/// base-table counts; join edges shrink by 1/max(ndv) as usual.
class CardinalityModel {
  public:
    explicit CardinalityModel(const Database& db) : db_(&db) {}

    double table_rows(const std::string& t) const { return double(db_->table(t).row_count()); }

    double interval_fraction(const ColRef& col, const Interval& iv) const {
        if (iv.is_all()) return 1.0;
        if (iv.is_empty()) return 0.0;
        const Table& t = db_->table(col.table);
        const ColumnStats& st = t.stats(col.column);
        ColumnType type = t.schema().column(col.column).type;
        if (type == ColumnType::FixedStr) {
            // equality is the common case; ranges fall back to a coarse guess
            if (iv.has_lo() && iv.has_hi() && compare_values(iv.lo(), iv.hi()) == 0)
                return 1.0 / std::max(1.0, st.distinct);
            return 0.5;
        }
        double lo = st.min.index() == 0 ? double(std::get<int64_t>(st.min)) : std::get<double>(st.min);
        double hi = st.max.index() == 0 ? double(std::get<int64_t>(st.max)) : std::get<double>(st.max);
        double width = hi - lo + (type == ColumnType::Float64 ? 0.0 : 1.0);
        if (width <= 0) width = 1.0;
        double a = iv.has_lo() ? bound_to_real(iv.lo()) : lo;
        double b = iv.has_hi() ? bound_to_real(iv.hi()) : hi;
        if (type != ColumnType::Float64) b += 1.0;  // canonical closed integer bounds
        a = std::max(a, lo);
        b = std::min(b, hi + (type == ColumnType::Float64 ? 0.0 : 1.0));
        double f = (b - a) / width;
        return std::clamp(f, 0.0, 1.0);
    }

    double selectivity(const std::string& table, const Predicate& pred) const {
        if (pred.is_empty()) return 0.0;
        double f = 1.0;
        for (auto& [col, iv] : pred.conjuncts()) {
            if (col.table == table) f *= interval_fraction(col, iv);
        }
        return f;
    }

    /// Fraction of the unfiltered join space that satisfies the box.
    double box_fraction(const std::vector<std::string>& tables, const Predicate& box) const {
        if (box.is_empty()) return 0.0;
        double f = 1.0;
        for (const std::string& t : tables) f *= selectivity(t, box);
        return f;
    }

    double boxset_fraction(const std::vector<std::string>& tables, const BoxSet& boxes) const {
        double f = 0.0;
        for (const Predicate& b : boxes) f += box_fraction(tables, b);  // boxes are disjoint
        return std::min(f, 1.0);
    }

    double distinct_values(const ColRef& col) const {
        return std::max(1.0, db_->table(col.table).stats(col.column).distinct);
    }

    /// Cardinality of joining `tables` over `edges` with the predicate applied.
    double join_rows(const std::vector<std::string>& tables, const std::vector<std::pair<ColRef, ColRef>>& edges,
                     const Predicate& pred) const {
        if (pred.is_empty()) return 0.0;
        double rows = 1.0;
        for (const std::string& t : tables) rows *= table_rows(t) * selectivity(t, pred);
        for (auto& [a, b] : edges) {
            bool a_in = std::find(tables.begin(), tables.end(), a.table) != tables.end();
            bool b_in = std::find(tables.begin(), tables.end(), b.table) != tables.end();
            if (a_in && b_in) rows /= std::max(1.0, std::max(distinct_values(a), distinct_values(b)));
        }
        return std::max(rows, 0.0);
    }

    /// Distinct combinations of the key columns among `rows` tuples.
    double distinct_combo(const std::vector<ColRef>& keys, double rows) const {
        double ndv = 1.0;
        for (const ColRef& k : keys) ndv *= distinct_values(k);
        return std::max(1.0, std::min(ndv, rows));
    }

  private:
    static double bound_to_real(const Value& v) {
        return v.index() == 0 ? double(std::get<int64_t>(v)) : std::get<double>(v);
    }

    const Database* db_;
};

/// Geometry of a candidate hash table as the cost model sees it.
struct CandidateGeometry {
    double entry_count = 0;
    double ht_bytes = 0;
    double dir_slots = 8;
    uint32_t node_bytes = 0;
    uint32_t t_width = 8;
    bool tagged = false;
};

inline uint32_t columns_byte_width(const Database& db, const std::vector<ColRef>& cols) {
    uint32_t w = 0;
    for (const ColRef& c : cols) w += db.table(c.table).schema().column(c.column).byte_width();
    return w;
}

/// Geometry of a not-yet-built table with the given entry shape.
inline CandidateGeometry fresh_candidate_geometry(uint32_t key_bytes, uint32_t payload_bytes, bool tagged) {
    CandidateGeometry g;
    g.entry_count = 0;
    g.dir_slots = 8;
    g.ht_bytes = 64;
    uint32_t header = 12 + (tagged ? 8 : 0);
    g.node_bytes = (header + key_bytes + payload_bytes + 7u) & ~7u;
    g.t_width = key_bytes + payload_bytes;
    g.tagged = tagged;
    return g;
}

/// Reuse-aware operator costs built on the calibration table. All costs are
/// nanoseconds of estimated runtime.
class CostModel {
  public:
    CostModel(const Database& db, const CalibrationTable& calib) : cards_(db), calib_(&calib) {}

    const CardinalityModel& cards() const { return cards_; }

    /// Directory slots an extendible table provisions for `entries`.
    static double dir_slots_for(double entries) {
        double slots = 8;
        while (entries > ReusableHashTable::kMaxLoadFactor * slots) slots *= 2;
        return slots;
    }

    /// contr / overh / cardinalities for reusing `geom` (content = `content`)
    /// to serve a join build over `tables`/`edges` filtered by `request`.
    ReuseStats join_stats(const std::vector<std::string>& tables,
                          const std::vector<std::pair<ColRef, ColRef>>& edges, const Predicate& request,
                          const BoxSet& content, const CandidateGeometry& geom, const ColRef& build_key,
                          double prober_rows, double probe_key_ndv) const {
        ReuseStats st;
        st.t_width = geom.t_width;
        st.taggable = geom.tagged;
        st.entry_count = geom.entry_count;
        st.retag_entries = geom.entry_count;

        double req_frac = cards_.box_fraction(tables, request);
        st.builder = cards_.join_rows(tables, edges, request);

        if (content.empty()) {  // fresh build
            st.contr = 0;
            st.overh = 0;
        } else {
            double content_frac = cards_.boxset_fraction(tables, content);
            BoxSet overlap;
            for (const Predicate& b : content) {
                Predicate both = b.conjoin(request);
                if (!both.is_empty()) overlap.push_back(both);
            }
            double overlap_frac = cards_.boxset_fraction(tables, overlap);
            st.contr = req_frac > 1e-12 ? std::clamp(overlap_frac / req_frac, 0.0, 1.0) : 1.0;
            st.overh = content_frac > 1e-12 ? std::clamp(1.0 - overlap_frac / content_frac, 0.0, 1.0) : 0.0;
        }

        double missing = st.builder * (1.0 - st.contr);
        st.projected_entries = geom.entry_count + missing;
        double slots = std::max(geom.dir_slots, dir_slots_for(st.projected_entries));
        st.dir_growth_bytes = (slots - geom.dir_slots) * 8.0;
        st.projected_ht_bytes = geom.ht_bytes + missing * geom.node_bytes + st.dir_growth_bytes;

        st.prober = prober_rows;
        double ndv_build = std::max(1.0, std::min(st.projected_entries, cards_.distinct_values(build_key)));
        double divisor = std::max({1.0, probe_key_ndv, ndv_build});
        st.est_probe_matches = prober_rows * st.projected_entries / divisor;
        return st;
    }

    /// Aggregate-side stats: |Input| and missing distinct keys under uniform
    /// key spread.
    ReuseStats aggregate_stats(const std::vector<std::string>& tables,
                               const std::vector<std::pair<ColRef, ColRef>>& edges, const Predicate& request,
                               const std::vector<ColRef>& group_keys, const BoxSet& content,
                               const CandidateGeometry& geom) const {
        ReuseStats st;
        st.t_width = geom.t_width;
        st.taggable = geom.tagged;
        st.entry_count = geom.entry_count;
        st.retag_entries = geom.entry_count;

        double req_rows = cards_.join_rows(tables, edges, request);
        st.input = req_rows;
        double req_frac = cards_.box_fraction(tables, request);

        if (content.empty()) {
            st.contr = 0;
            st.overh = 0;
        } else {
            double content_frac = cards_.boxset_fraction(tables, content);
            BoxSet overlap;
            for (const Predicate& b : content) {
                Predicate both = b.conjoin(request);
                if (!both.is_empty()) overlap.push_back(both);
            }
            double overlap_frac = cards_.boxset_fraction(tables, overlap);
            st.contr = req_frac > 1e-12 ? std::clamp(overlap_frac / req_frac, 0.0, 1.0) : 1.0;
            st.overh = content_frac > 1e-12 ? std::clamp(1.0 - overlap_frac / content_frac, 0.0, 1.0) : 0.0;
        }

        st.distinct_keys = cards_.distinct_combo(group_keys, std::max(req_rows, 1.0));
        double missing_keys = st.distinct_keys * (1.0 - st.contr);
        st.projected_entries = geom.entry_count + missing_keys;
        double slots = std::max(geom.dir_slots, dir_slots_for(st.projected_entries));
        st.dir_growth_bytes = (slots - geom.dir_slots) * 8.0;
        st.projected_ht_bytes = geom.ht_bytes + missing_keys * geom.node_bytes + st.dir_growth_bytes;
        return st;
    }

    double insert_ns(const ReuseStats& st) const {
        return calib_->interpolate(CalibOp::Insert, st.projected_ht_bytes, st.t_width);
    }
    double lookup_ns(const ReuseStats& st) const {
        return calib_->interpolate(CalibOp::Lookup, st.projected_ht_bytes, st.t_width);
    }
    double update_ns(const ReuseStats& st) const {
        return calib_->interpolate(CalibOp::Update, st.projected_ht_bytes, st.t_width);
    }

    /// Directory allocation priced at measured write bandwidth; chain entries
    /// move lazily, so resize only touches the bucket array.
    double cost_resize(const ReuseStats& st) const { return st.dir_growth_bytes * calib_->write_ns_per_byte(); }

    /// c_RHJ = c_resize + |Builder|(1-contr) c_i + |Prober| c_l, plus the
    /// post-filter surcharge when the table carries unneeded entries.
    double cost_rhj(const ReuseStats& st) const {
        double build = st.builder * (1.0 - st.contr) * insert_ns(st);
        double probe = st.prober * lookup_ns(st);
        return cost_resize(st) + build + probe + cost_postfilter_join(st);
    }

    /// Post-filter: probe matches hit false positives in proportion to overh;
    /// each filtered entry is priced like one read-evaluate pass (c_u).
    double cost_postfilter_join(const ReuseStats& st) const {
        return st.est_probe_matches * st.overh * update_ns(st);
    }

    /// c_RHA = c_resize + |distinct|(1-contr) c_i + (|Input|-|distinct|)(1-contr) c_u,
    /// plus the overh-scaled read-back filter.
    double cost_rha(const ReuseStats& st) const {
        double ins = st.distinct_keys * (1.0 - st.contr) * insert_ns(st);
        double upd = (st.input - st.distinct_keys) * (1.0 - st.contr) * update_ns(st);
        double postfilter = st.projected_entries * st.overh * update_ns(st);
        return cost_resize(st) + ins + upd + postfilter;
    }

    /// Shared variants pay one read-evaluate-write pass per cached entry to
    /// refresh the query-id tags.
    double cost_retag(const ReuseStats& st) const {
        if (st.entry_count > 0 && !st.taggable) throw NotShareable("candidate hash table carries no query tags");
        return st.retag_entries * update_ns(st);
    }

    double cost_shared_rhj(const ReuseStats& st) const { return cost_rhj(st) + cost_retag(st); }
    double cost_shared_rha(const ReuseStats& st) const { return cost_rha(st) + cost_retag(st); }

    /// Full-scan and index-scan estimates for the plumbing around hash ops.
    double cost_scan(double rows, double row_bytes) const {
        return rows * std::max(8.0, row_bytes) * calib_->scan_ns_per_byte();
    }

    double cost_index_scan(double matched_rows, double row_bytes, double table_rows) const {
        double descend = std::log2(std::max(2.0, table_rows)) * 4.0;
        return descend + matched_rows * std::max(8.0, row_bytes) * calib_->scan_ns_per_byte() * 2.0;
    }

    /// Reading an aggregate table back out (emit or post-aggregation input).
    double cost_entry_scan(double entries, double t_width) const {
        return entries * std::max(8.0, double(t_width)) * calib_->scan_ns_per_byte();
    }

  private:
    CardinalityModel cards_;
    const CalibrationTable* calib_;
};

}  // namespace reusedb
