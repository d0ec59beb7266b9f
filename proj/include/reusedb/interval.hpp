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

#include <optional>
#include <string>
#include <vector>

#include "reusedb/common.hpp"

namespace reusedb {

/// One-dimensional interval with optional open bounds on either side.
///
/// Canonical form: integer bounds are normalized to closed bounds, the empty
/// interval has a single unique representation, and a fully unbounded
/// interval is "all". Values on both bounds must have the same kind.
class Interval {
  public:
    Interval() = default;  // all

    static Interval all() { return Interval(); }

    static Interval none() {
        Interval iv;
        iv.empty_ = true;
        return iv;
    }

    static Interval range(std::optional<Value> lo, bool lo_incl, std::optional<Value> hi, bool hi_incl) {
        Interval iv;
        iv.lo_ = std::move(lo);
        iv.hi_ = std::move(hi);
        iv.lo_incl_ = lo_incl;
        iv.hi_incl_ = hi_incl;
        iv.canonicalize();
        return iv;
    }

    static Interval at_least(Value v) { return range(std::move(v), true, std::nullopt, false); }
    static Interval greater(Value v) { return range(std::move(v), false, std::nullopt, false); }
    static Interval at_most(Value v) { return range(std::nullopt, false, std::move(v), true); }
    static Interval less(Value v) { return range(std::nullopt, false, std::move(v), false); }
    static Interval point(Value v) { return range(v, true, v, true); }
    /// Closed-open [lo, hi).
    static Interval half_open(Value lo, Value hi) { return range(std::move(lo), true, std::move(hi), false); }
    static Interval closed(Value lo, Value hi) { return range(std::move(lo), true, std::move(hi), true); }

    bool is_all() const { return !empty_ && !lo_ && !hi_; }
    bool is_empty() const { return empty_; }
    bool has_lo() const { return lo_.has_value(); }
    bool has_hi() const { return hi_.has_value(); }
    const Value& lo() const { return *lo_; }
    const Value& hi() const { return *hi_; }
    bool lo_inclusive() const { return lo_incl_; }
    bool hi_inclusive() const { return hi_incl_; }

    bool contains(const Value& v) const {
        if (empty_) return false;
        if (lo_) {
            int c = compare_values(v, *lo_);
            if (c < 0 || (c == 0 && !lo_incl_)) return false;
        }
        if (hi_) {
            int c = compare_values(v, *hi_);
            if (c > 0 || (c == 0 && !hi_incl_)) return false;
        }
        return true;
    }

    /// this ⊆ o.
    bool subset_of(const Interval& o) const {
        if (empty_) return true;
        if (o.empty_) return false;
        // Lower side: this.lo must be >= o.lo.
        if (o.lo_) {
            if (!lo_) return false;
            int c = compare_values(*lo_, *o.lo_);
            if (c < 0) return false;
            if (c == 0 && lo_incl_ && !o.lo_incl_) return false;
        }
        if (o.hi_) {
            if (!hi_) return false;
            int c = compare_values(*hi_, *o.hi_);
            if (c > 0) return false;
            if (c == 0 && hi_incl_ && !o.hi_incl_) return false;
        }
        return true;
    }

    bool intersects(const Interval& o) const { return !intersect(o).is_empty(); }

    Interval intersect(const Interval& o) const {
        if (empty_ || o.empty_) return none();
        Interval out;
        // max of lower bounds
        if (!lo_) {
            out.lo_ = o.lo_;
            out.lo_incl_ = o.lo_incl_;
        } else if (!o.lo_) {
            out.lo_ = lo_;
            out.lo_incl_ = lo_incl_;
        } else {
            int c = compare_values(*lo_, *o.lo_);
            if (c > 0 || (c == 0 && !lo_incl_)) {
                out.lo_ = lo_;
                out.lo_incl_ = lo_incl_;
            } else {
                out.lo_ = o.lo_;
                out.lo_incl_ = o.lo_incl_;
            }
        }
        // min of upper bounds
        if (!hi_) {
            out.hi_ = o.hi_;
            out.hi_incl_ = o.hi_incl_;
        } else if (!o.hi_) {
            out.hi_ = hi_;
            out.hi_incl_ = hi_incl_;
        } else {
            int c = compare_values(*hi_, *o.hi_);
            if (c < 0 || (c == 0 && !hi_incl_)) {
                out.hi_ = hi_;
                out.hi_incl_ = hi_incl_;
            } else {
                out.hi_ = o.hi_;
                out.hi_incl_ = o.hi_incl_;
            }
        }
        out.canonicalize();
        return out;
    }

    /// this ∖ o as up to two disjoint intervals (below and above o).
    std::vector<Interval> minus(const Interval& o) const {
        if (empty_) return {};
        if (o.empty_) return {*this};
        std::vector<Interval> out;
        if (o.lo_) {
            Interval below = intersect(range(std::nullopt, false, *o.lo_, !o.lo_incl_));
            if (!below.is_empty()) out.push_back(below);
        }
        if (o.hi_) {
            Interval above = intersect(range(*o.hi_, !o.hi_incl_, std::nullopt, false));
            if (!above.is_empty()) out.push_back(above);
        }
        return out;
    }

    /// Smallest interval containing both (used for per-column hulls).
    Interval hull(const Interval& o) const {
        if (empty_) return o;
        if (o.empty_) return *this;
        Interval out;
        if (lo_ && o.lo_) {
            int c = compare_values(*lo_, *o.lo_);
            if (c < 0 || (c == 0 && lo_incl_)) {
                out.lo_ = lo_;
                out.lo_incl_ = lo_incl_;
            } else {
                out.lo_ = o.lo_;
                out.lo_incl_ = o.lo_incl_;
            }
        }
        if (hi_ && o.hi_) {
            int c = compare_values(*hi_, *o.hi_);
            if (c > 0 || (c == 0 && hi_incl_)) {
                out.hi_ = hi_;
                out.hi_incl_ = hi_incl_;
            } else {
                out.hi_ = o.hi_;
                out.hi_incl_ = o.hi_incl_;
            }
        }
        out.canonicalize();
        return out;
    }

    bool operator==(const Interval& o) const {
        if (empty_ != o.empty_) return false;
        if (empty_) return true;
        if (lo_.has_value() != o.lo_.has_value() || hi_.has_value() != o.hi_.has_value()) return false;
        if (lo_ && (lo_incl_ != o.lo_incl_ || compare_values(*lo_, *o.lo_) != 0)) return false;
        if (hi_ && (hi_incl_ != o.hi_incl_ || compare_values(*hi_, *o.hi_) != 0)) return false;
        return true;
    }

    std::string str(const std::string& col = "x") const {
        if (empty_) return "FALSE";
        if (is_all()) return "TRUE";
        std::string s;
        if (lo_) s += col + (lo_incl_ ? " >= " : " > ") + value_to_string(*lo_);
        if (hi_) {
            if (!s.empty()) s += " AND ";
            s += col + (hi_incl_ ? " <= " : " < ") + value_to_string(*hi_);
        }
        return s;
    }

  private:
    void canonicalize() {
        if (empty_) {
            lo_.reset();
            hi_.reset();
            lo_incl_ = hi_incl_ = false;
            return;
        }
        // Integer bounds: open -> closed so syntactically different ranges with
        // the same point set compare equal.
        if (lo_ && kind_of(*lo_) == ValueKind::Int && !lo_incl_) {
            lo_ = std::get<int64_t>(*lo_) + 1;
            lo_incl_ = true;
        }
        if (hi_ && kind_of(*hi_) == ValueKind::Int && !hi_incl_) {
            hi_ = std::get<int64_t>(*hi_) - 1;
            hi_incl_ = true;
        }
        if (lo_ && hi_) {
            int c = compare_values(*lo_, *hi_);
            if (c > 0 || (c == 0 && !(lo_incl_ && hi_incl_))) {
                empty_ = true;
                lo_.reset();
                hi_.reset();
                lo_incl_ = hi_incl_ = false;
            }
        }
    }

    std::optional<Value> lo_;
    std::optional<Value> hi_;
    bool lo_incl_ = false;
    bool hi_incl_ = false;
    bool empty_ = false;
};

}  // namespace reusedb
