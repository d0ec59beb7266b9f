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

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reusedb/common.hpp"
#include "reusedb/interval.hpp"

namespace reusedb {

/// Conjunction of single-column intervals. At most one interval per column;
/// constraining the same column twice intersects. An unsatisfiable predicate
/// collapses to a unique canonical FALSE.
class Predicate {
  public:
    Predicate() = default;  // TRUE

    static Predicate truth() { return Predicate(); }

    static Predicate falsity() {
        Predicate p;
        p.unsat_ = true;
        return p;
    }

    static Predicate on(ColRef col, Interval iv) {
        Predicate p;
        p.constrain(std::move(col), std::move(iv));
        return p;
    }

    void constrain(ColRef col, Interval iv) {
        if (unsat_) return;
        auto it = conjuncts_.find(col);
        if (it != conjuncts_.end()) iv = it->second.intersect(iv);
        if (iv.is_empty()) {
            unsat_ = true;
            conjuncts_.clear();
            return;
        }
        if (iv.is_all()) {
            if (it != conjuncts_.end()) conjuncts_.erase(it);
            return;
        }
        conjuncts_[std::move(col)] = std::move(iv);
    }

    bool is_true() const { return !unsat_ && conjuncts_.empty(); }
    bool is_empty() const { return unsat_; }
    const std::map<ColRef, Interval>& conjuncts() const { return conjuncts_; }

    Interval interval_of(const ColRef& col) const {
        if (unsat_) return Interval::none();
        auto it = conjuncts_.find(col);
        return it == conjuncts_.end() ? Interval::all() : it->second;
    }

    std::set<ColRef> columns() const {
        std::set<ColRef> out;
        for (auto& [c, _] : conjuncts_) out.insert(c);
        return out;
    }

    /// true iff every tuple satisfying *this satisfies q.
    bool implies(const Predicate& q) const {
        if (unsat_) return true;
        if (q.unsat_) return false;
        for (auto& [col, qi] : q.conjuncts_) {
            if (!interval_of(col).subset_of(qi)) return false;
        }
        return true;
    }

    /// true iff some tuple can satisfy both.
    bool intersects(const Predicate& q) const {
        if (unsat_ || q.unsat_) return false;
        for (auto& [col, qi] : q.conjuncts_) {
            if (!interval_of(col).intersects(qi)) return false;
        }
        return true;
    }

    Predicate conjoin(const Predicate& q) const {
        if (unsat_ || q.unsat_) return falsity();
        Predicate out = *this;
        for (auto& [col, qi] : q.conjuncts_) {
            out.constrain(col, qi);
            if (out.unsat_) break;
        }
        return out;
    }

    /// this ∧ ¬c as a list of disjoint conjunctive boxes whose union is exactly
    /// the set difference. Empty when c subsumes this. At most two boxes per
    /// column of c (standard box-subtraction sweep).
    std::vector<Predicate> difference(const Predicate& c) const {
        std::vector<Predicate> out;
        if (unsat_) return out;
        if (c.unsat_) {
            out.push_back(*this);
            return out;
        }
        if (!intersects(c)) {
            out.push_back(*this);
            return out;
        }
        Predicate acc = *this;  // remainder still to carve, shrinks toward this ∧ c
        for (auto& [col, ci] : c.conjuncts_) {
            Interval mine = acc.interval_of(col);
            for (const Interval& piece : mine.minus(ci)) {
                Predicate box = acc;
                box.conjuncts_[col] = piece;  // piece is nonempty and not all
                out.push_back(std::move(box));
            }
            acc.constrain(col, ci);
            if (acc.unsat_) break;
        }
        return out;
    }

    /// Standard conjunction semantics. The lookup returns the tuple's value for
    /// a column or nullopt when the tuple does not carry it, which raises
    /// AttributeUnavailable.
    bool evaluate(const std::function<std::optional<Value>(const ColRef&)>& lookup) const {
        if (unsat_) return false;
        for (auto& [col, iv] : conjuncts_) {
            std::optional<Value> v = lookup(col);
            if (!v) throw AttributeUnavailable("predicate references unavailable attribute " + col.str());
            if (!iv.contains(*v)) return false;
        }
        return true;
    }

    bool operator==(const Predicate& o) const { return unsat_ == o.unsat_ && conjuncts_ == o.conjuncts_; }

    std::string str() const {
        if (unsat_) return "FALSE";
        if (conjuncts_.empty()) return "TRUE";
        std::string s;
        for (auto& [col, iv] : conjuncts_) {
            if (!s.empty()) s += " AND ";
            s += iv.str(col.str());
        }
        return s;
    }

  private:
    std::map<ColRef, Interval> conjuncts_;
    bool unsat_ = false;
};

// ---------------------------------------------------------------------------
// Disjoint box sets. A cached hash table's content is a union of disjoint
// conjunctive boxes: one box right after a fresh build, possibly more after
// overlapping-reuse added delta regions.
// ---------------------------------------------------------------------------

using BoxSet = std::vector<Predicate>;

/// r ∖ (b1 ∪ b2 ∪ ...) as disjoint boxes.
inline BoxSet difference_from_set(const Predicate& r, const BoxSet& boxes) {
    BoxSet work;
    if (!r.is_empty()) work.push_back(r);
    for (const Predicate& b : boxes) {
        BoxSet next;
        for (const Predicate& w : work) {
            for (Predicate& piece : w.difference(b)) next.push_back(std::move(piece));
        }
        work = std::move(next);
        if (work.empty()) break;
    }
    return work;
}

/// r ⊆ ∪ boxes.
inline bool set_covers(const BoxSet& boxes, const Predicate& r) { return difference_from_set(r, boxes).empty(); }

/// ∪ boxes ⊆ r.
inline bool set_within(const BoxSet& boxes, const Predicate& r) {
    for (const Predicate& b : boxes) {
        if (!b.implies(r)) return false;
    }
    return true;
}

inline bool set_intersects(const BoxSet& boxes, const Predicate& r) {
    for (const Predicate& b : boxes) {
        if (b.intersects(r)) return true;
    }
    return false;
}

/// Per-column hull of the union: the tightest single box containing all boxes.
inline Predicate set_hull(const BoxSet& boxes) {
    if (boxes.empty()) return Predicate::falsity();
    // Columns unconstrained in any box are unconstrained in the hull.
    std::map<ColRef, int> counts;
    for (const Predicate& b : boxes) {
        for (auto& [col, _] : b.conjuncts()) counts[col]++;
    }
    Predicate hull;
    for (auto& [col, n] : counts) {
        if (n != int(boxes.size())) continue;
        Interval h = Interval::none();
        for (const Predicate& b : boxes) h = h.hull(b.interval_of(col));
        hull.constrain(col, h);
    }
    return hull;
}

inline std::string boxset_str(const BoxSet& boxes) {
    if (boxes.empty()) return "FALSE";
    std::string s;
    for (const Predicate& b : boxes) {
        if (!s.empty()) s += " OR ";
        s += "(" + b.str() + ")";
    }
    return s;
}

}  // namespace reusedb
