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

#include <catch2/catch_amalgamated.hpp>
#include <random>
#include <set>

#include "reusedb/matcher.hpp"

using namespace reusedb;

namespace {

const ColRef kAge{"customer", "age"};
const ColRef kBal{"customer", "bal"};
const ColRef kKey{"customer", "cid"};

BuildDesc join_desc() {
    BuildDesc d;
    d.kind = HtKind::JoinBuild;
    d.tables = {"customer"};
    d.key = kKey;
    return d;
}

BuildDesc agg_desc(std::vector<ColRef> keys, std::vector<AggSpec> aggs) {
    BuildDesc d;
    d.kind = HtKind::Aggregate;
    d.tables = {"customer"};
    d.group_keys = std::move(keys);
    d.aggs = std::move(aggs);
    d.canonicalize();
    return d;
}

RequestDesc join_request(Predicate pred, std::vector<ColRef> attrs = {kKey, kAge}) {
    return RequestDesc{join_desc(), std::move(pred), std::move(attrs)};
}

CachedDesc join_cached(BoxSet content, std::vector<ColRef> attrs = {kKey, kAge}) {
    return CachedDesc{join_desc(), std::move(content), std::move(attrs)};
}

// Dense 2-d integer domain: tuple sets equal region ∩ {0..15}^2, so set
// relations are exactly the region relations the matcher is supposed to find.
std::set<std::pair<int64_t, int64_t>> points(const Predicate& p) {
    std::set<std::pair<int64_t, int64_t>> out;
    for (int64_t a = 0; a < 16; ++a) {
        for (int64_t b = 0; b < 16; ++b) {
            if (p.evaluate([&](const ColRef& c) -> std::optional<Value> {
                    if (c == kAge) return Value(a);
                    if (c == kBal) return Value(b);
                    return std::nullopt;
                }))
                out.insert({a, b});
        }
    }
    return out;
}

std::set<std::pair<int64_t, int64_t>> points(const BoxSet& boxes) {
    std::set<std::pair<int64_t, int64_t>> out;
    for (auto& b : boxes) {
        for (auto& pt : points(b)) out.insert(pt);
    }
    return out;
}

Interval random_interval(std::mt19937_64& rng) {
    int64_t a = 2 + int64_t(rng() % 12);
    int64_t b = 2 + int64_t(rng() % 12);
    switch (rng() % 4) {
        case 0: return Interval::at_least(a);
        case 1: return Interval::less(a);
        case 2: return Interval::point(a);
        default: return Interval::half_open(std::min(a, b), std::max(a, b) + 1);
    }
}

Predicate random_predicate(std::mt19937_64& rng) {
    Predicate p;
    if (rng() % 4 != 0) p.constrain(kAge, random_interval(rng));
    if (rng() % 2 == 0) p.constrain(kBal, random_interval(rng));
    return p;
}

}  // namespace

TEST_CASE("identical plans classify as exact", "[matcher]") {
    Predicate p = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    auto cls = matcher::classify(join_request(p), join_cached({p}));
    REQUIRE(cls.has_value());
    CHECK(*cls == ReuseCase::Exact);
    auto rw = matcher::rewrite(join_request(p), join_cached({p}), *cls);
    REQUIRE(rw.has_value());
    CHECK(!rw->post_filter.has_value());
    CHECK(rw->deltas.empty());
}

TEST_CASE("subsuming: cached age>=20 serves request age>=30", "[matcher]") {
    Predicate c = Predicate::on(kAge, Interval::at_least(int64_t(20)));
    Predicate r = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    auto cls = matcher::classify(join_request(r), join_cached({c}));
    REQUIRE(cls.has_value());
    CHECK(*cls == ReuseCase::Subsuming);
    auto rw = matcher::rewrite(join_request(r), join_cached({c}), *cls);
    REQUIRE(rw.has_value());
    REQUIRE(rw->post_filter.has_value());
    CHECK(*rw->post_filter == r);  // all false positives post-filtered
    CHECK(rw->deltas.empty());
}

TEST_CASE("partial: cached age>=30 serves request age>=20 with delta", "[matcher]") {
    Predicate c = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    Predicate r = Predicate::on(kAge, Interval::at_least(int64_t(20)));
    auto cls = matcher::classify(join_request(r), join_cached({c}));
    REQUIRE(cls.has_value());
    CHECK(*cls == ReuseCase::Partial);
    auto rw = matcher::rewrite(join_request(r), join_cached({c}), *cls);
    REQUIRE(rw.has_value());
    CHECK(!rw->post_filter.has_value());
    REQUIRE(rw->deltas.size() == 1);
    CHECK(rw->deltas[0] == Predicate::on(kAge, Interval::half_open(int64_t(20), int64_t(30))));
}

TEST_CASE("overlapping gets both rewrites", "[matcher]") {
    Predicate c = Predicate::on(kAge, Interval::half_open(int64_t(20), int64_t(40)));
    Predicate r = Predicate::on(kAge, Interval::half_open(int64_t(10), int64_t(30)));
    auto cls = matcher::classify(join_request(r), join_cached({c}));
    REQUIRE(cls.has_value());
    CHECK(*cls == ReuseCase::Overlapping);
    auto rw = matcher::rewrite(join_request(r), join_cached({c}), *cls);
    REQUIRE(rw.has_value());
    REQUIRE(rw->post_filter.has_value());
    REQUIRE(rw->deltas.size() == 1);
    CHECK(rw->deltas[0] == Predicate::on(kAge, Interval::half_open(int64_t(10), int64_t(20))));
}

TEST_CASE("skeleton mismatch is NoMatch without predicate tests", "[matcher]") {
    Predicate p = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    // different hash key
    BuildDesc other = join_desc();
    other.key = kAge;
    CHECK(!matcher::classify(RequestDesc{other, p, {}}, join_cached({p})).has_value());
    // different base tables
    BuildDesc tabs = join_desc();
    tabs.tables = {"orders"};
    CHECK(!matcher::classify(RequestDesc{tabs, p, {}}, join_cached({p})).has_value());
    // disjoint predicate regions
    Predicate q = Predicate::on(kAge, Interval::less(int64_t(10)));
    CHECK(!matcher::classify(join_request(q), join_cached({p})).has_value());
}

TEST_CASE("disqualification: post-filter column not stored", "[matcher]") {
    Predicate c = Predicate::on(kAge, Interval::at_least(int64_t(20)));
    Predicate r = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    // cached table stores only the key, not age -> cannot post-filter
    auto rw = matcher::rewrite(join_request(r, {kKey}), join_cached({c}, {kKey}), ReuseCase::Subsuming);
    CHECK(!rw.has_value());
    // exact reuse does not need age unless the probe reads it
    auto ex = matcher::rewrite(join_request(c, {kKey}), join_cached({c}, {kKey}), ReuseCase::Exact);
    CHECK(ex.has_value());
    // but a required output attribute missing from the table disqualifies too
    auto out = matcher::rewrite(join_request(c, {kKey, kBal}), join_cached({c}, {kKey, kAge}), ReuseCase::Exact);
    CHECK(!out.has_value());
}

TEST_CASE("aggregate: subset keys with additive functions", "[matcher]") {
    Predicate p = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    std::vector<AggSpec> fns = {{AggFn::Sum, kBal}, {AggFn::Count, {}}};
    CachedDesc cached{agg_desc({kAge, kBal}, fns), {p}, {kAge, kBal}};

    // same predicates, G_r = G_c minus one key -> Exact plus post-aggregation
    RequestDesc req{agg_desc({kBal}, fns), p, {kBal}};
    auto cls = matcher::classify_aggregate(req, cached);
    REQUIRE(cls.has_value());
    CHECK(*cls == ReuseCase::Exact);
    auto rw = matcher::rewrite(req, cached, *cls);
    REQUIRE(rw.has_value());
    REQUIRE(rw->post_agg_keys.has_value());
    CHECK(*rw->post_agg_keys == std::vector<ColRef>{kBal});

    // non-additive function with coarser keys -> NoMatch by rule
    std::vector<AggSpec> med = {{AggFn::Median, kBal}};
    RequestDesc req_med{agg_desc({kBal}, med), p, {kBal}};
    CachedDesc cached_med{agg_desc({kAge, kBal}, med), {p}, {kAge, kBal}};
    CHECK(!matcher::classify_aggregate(req_med, cached_med).has_value());

    // requested function not stored in the cached table -> NoMatch
    RequestDesc req_min{agg_desc({kBal}, {{AggFn::Min, kBal}}), p, {kBal}};
    CHECK(!matcher::classify_aggregate(req_min, cached).has_value());

    // wider predicate + subset keys -> Partial with post-aggregation
    Predicate wider = Predicate::on(kAge, Interval::at_least(int64_t(20)));
    RequestDesc req_part{agg_desc({kBal}, fns), wider, {kBal}};
    auto cls_part = matcher::classify_aggregate(req_part, cached);
    REQUIRE(cls_part.has_value());
    CHECK(*cls_part == ReuseCase::Partial);
    auto rw_part = matcher::rewrite(req_part, cached, *cls_part);
    REQUIRE(rw_part.has_value());
    CHECK(rw_part->post_agg_keys.has_value());
    CHECK(rw_part->deltas.size() == 1);
}

TEST_CASE("aggregate post-filter must be testable on group keys", "[matcher]") {
    // cached aggregate grouped by bal only; subsuming request constrains age,
    // which the entries do not carry -> disqualified
    Predicate c = Predicate::on(kAge, Interval::at_least(int64_t(20)));
    Predicate r = Predicate::on(kAge, Interval::at_least(int64_t(30)));
    std::vector<AggSpec> fns = {{AggFn::Sum, kBal}};
    CachedDesc cached{agg_desc({kBal}, fns), {c}, {kBal}};
    RequestDesc req{agg_desc({kBal}, fns), r, {kBal}};
    auto cls = matcher::classify_aggregate(req, cached);
    REQUIRE(cls.has_value());
    CHECK(*cls == ReuseCase::Subsuming);
    CHECK(!matcher::rewrite(req, cached, *cls).has_value());
}

TEST_CASE("case precedence and exclusivity on random pairs", "[matcher]") {
    std::mt19937_64 rng(31337);
    for (int iter = 0; iter < 500; ++iter) {
        Predicate r = random_predicate(rng);
        Predicate c = random_predicate(rng);
        if (r.is_empty() || c.is_empty()) continue;
        auto sr = points(r);
        auto sc = points(c);
        auto cls = matcher::classify(join_request(r), join_cached({c}));
        if (sr == sc) {
            REQUIRE(cls.has_value());
            CHECK(*cls == ReuseCase::Exact);
        } else if (std::includes(sc.begin(), sc.end(), sr.begin(), sr.end())) {
            REQUIRE(cls.has_value());
            CHECK(*cls == ReuseCase::Subsuming);
        } else if (std::includes(sr.begin(), sr.end(), sc.begin(), sc.end())) {
            REQUIRE(cls.has_value());
            CHECK(*cls == ReuseCase::Partial);
        } else {
            std::vector<std::pair<int64_t, int64_t>> inter;
            std::set_intersection(sr.begin(), sr.end(), sc.begin(), sc.end(), std::back_inserter(inter));
            if (inter.empty()) {
                CHECK(!cls.has_value());
            } else {
                REQUIRE(cls.has_value());
                CHECK(*cls == ReuseCase::Overlapping);
            }
        }
    }
}

TEST_CASE("rewrite soundness as set algebra", "[matcher]") {
    // content ∪ deltas, post-filtered, must equal the requested tuple set —
    // including multi-box cached content as produced by overlapping reuse.
    std::mt19937_64 rng(4242);
    for (int iter = 0; iter < 500; ++iter) {
        Predicate r = random_predicate(rng);
        BoxSet content;
        Predicate c1 = random_predicate(rng);
        if (c1.is_empty()) continue;
        content.push_back(c1);
        if (rng() % 3 == 0) {
            for (Predicate& extra : random_predicate(rng).difference(c1)) content.push_back(extra);
        }
        auto cls = matcher::classify_regions(r, content);
        if (!cls) continue;
        auto rw = matcher::rewrite(join_request(r, {kKey, kAge, kBal}),
                                   join_cached(content, {kKey, kAge, kBal}), *cls);
        REQUIRE(rw.has_value());

        auto tuples = points(content);
        for (auto& pt : points(rw->deltas)) {
            bool inserted = tuples.insert(pt).second;
            CHECK(inserted);  // deltas never duplicate cached tuples
        }
        std::set<std::pair<int64_t, int64_t>> result;
        for (auto& pt : tuples) {
            bool pass = true;
            if (rw->post_filter) {
                pass = rw->post_filter->evaluate([&](const ColRef& col) -> std::optional<Value> {
                    if (col == kAge) return Value(pt.first);
                    if (col == kBal) return Value(pt.second);
                    return std::nullopt;
                });
            }
            if (pass) result.insert(pt);
        }
        CHECK(result == points(r));
    }
}
