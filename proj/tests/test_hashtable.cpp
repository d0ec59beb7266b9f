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
#include <map>
#include <random>
#include <unordered_map>

#include "reusedb/hashtable.hpp"

using namespace reusedb;

namespace {

std::span<const uint8_t> key_span(const int64_t& k) {
    return {reinterpret_cast<const uint8_t*>(&k), 8};
}

std::vector<int64_t> matches(ReusableHashTable& ht, int64_t key) {
    std::vector<int64_t> vals;
    ht.for_each_match(key_span(key), [&](uint8_t* p, uint64_t*) {
        int64_t v;
        std::memcpy(&v, p, 8);
        vals.push_back(v);
    });
    std::sort(vals.begin(), vals.end());
    return vals;
}

}  // namespace

TEST_CASE("insert then lookup", "[hashtable]") {
    ReusableHashTable ht(HtKind::JoinBuild, 8, 8);
    int64_t k = 42, v = 1001;
    ht.insert(key_span(k), key_span(v));
    CHECK(matches(ht, 42) == std::vector<int64_t>{1001});
    CHECK(matches(ht, 43).empty());
    // duplicate keys are kept (multi-map for join builds)
    int64_t v2 = 1002;
    ht.insert(key_span(k), key_span(v2));
    CHECK(matches(ht, 42) == std::vector<int64_t>{1001, 1002});
    CHECK(ht.entry_count() == 2);
}

TEST_CASE("width mismatch is a layout error", "[hashtable]") {
    ReusableHashTable ht(HtKind::JoinBuild, 8, 8);
    int64_t k = 1;
    std::vector<uint8_t> wide(16, 0);
    CHECK_THROWS_AS(ht.insert(key_span(k), wide), LayoutError);
}

TEST_CASE("multi-map equivalence under random interleavings", "[hashtable]") {
    std::mt19937_64 rng(2024);
    ReusableHashTable ht(HtKind::JoinBuild, 8, 8);
    std::unordered_multimap<int64_t, int64_t> oracle;
    const int64_t key_space = 5000;
    for (int op = 0; op < 100000; ++op) {
        int64_t k = int64_t(rng() % key_space);
        int what = int(rng() % 10);
        if (what < 6) {
            int64_t v = int64_t(rng());
            ht.insert(key_span(k), key_span(v));
            oracle.emplace(k, v);
        } else if (what < 9) {
            auto got = matches(ht, k);
            std::vector<int64_t> want;
            auto [lo, hi] = oracle.equal_range(k);
            for (auto it = lo; it != hi; ++it) want.push_back(it->second);
            std::sort(want.begin(), want.end());
            REQUIRE(got == want);
        } else {
            // explicit presize: lazy redistribution must stay invisible
            ht.resize(ht.entry_count() + rng() % 4096);
        }
    }
    CHECK(ht.entry_count() == oracle.size());
    // full sweep at the end
    for (int64_t k = 0; k < key_space; k += 97) {
        auto got = matches(ht, k);
        std::vector<int64_t> want;
        auto [lo, hi] = oracle.equal_range(k);
        for (auto it = lo; it != hi; ++it) want.push_back(it->second);
        std::sort(want.begin(), want.end());
        REQUIRE(got == want);
    }
    // htSize audit: recount matches tracked value exactly
    CHECK(ht.recount_bytes() == ht.ht_size_bytes());
}

TEST_CASE("resize keeps lookups intact and htSize grows monotonically", "[hashtable]") {
    ReusableHashTable ht(HtKind::JoinBuild, 8, 8);
    size_t last = ht.ht_size_bytes();
    for (int64_t i = 0; i < 1000; ++i) {
        ht.insert(key_span(i), key_span(i));
        CHECK(ht.ht_size_bytes() >= last);
        last = ht.ht_size_bytes();
    }
    // resize of a populated table: all prior keys still reachable
    ht.resize(100000);
    for (int64_t i = 0; i < 1000; ++i) REQUIRE(matches(ht, i) == std::vector<int64_t>{i});
    CHECK(ht.recount_bytes() == ht.ht_size_bytes());

    // resize of an empty table: directory grows, no entries
    ReusableHashTable e(HtKind::JoinBuild, 8, 0);
    size_t dir_before = e.directory_size();
    e.resize(1 << 14);
    CHECK(e.entry_count() == 0);
    CHECK(e.directory_size() > dir_before);
    CHECK(e.recount_bytes() == e.ht_size_bytes());
}

TEST_CASE("update_aggregate insert/update accounting", "[hashtable]") {
    ReusableHashTable ht(HtKind::Aggregate, 8, 8);
    std::mt19937_64 rng(7);

    // 100 tuples over 10 distinct keys -> 10 inserts, 90 updates
    int inserts = 0, updates = 0;
    std::map<int64_t, int64_t> sums;
    for (int i = 0; i < 100; ++i) {
        int64_t k = int64_t(i % 10);
        int64_t add = int64_t(rng() % 1000);
        bool inserted = ht.update_aggregate(
            key_span(k), [&](uint8_t* s) { std::memcpy(s, &add, 8); },  // state = init(value)
            [&](uint8_t* s) {
                int64_t v;
                std::memcpy(&v, s, 8);
                v += add;
                std::memcpy(s, &v, 8);
            });
        (inserted ? inserts : updates)++;
        sums[k] += add;
    }
    CHECK(inserts == 10);
    CHECK(updates == 90);
    // final states equal per-key sums
    for (auto& [k, want] : sums) {
        ht.for_each_match(key_span(k), [&](uint8_t* s, uint64_t*) {
            int64_t v;
            std::memcpy(&v, s, 8);
            CHECK(v == want);
        });
    }
    CHECK(ht.entry_count() == 10);
    // kind mismatch
    ReusableHashTable jb(HtKind::JoinBuild, 8, 8);
    CHECK_THROWS_AS(jb.update_aggregate(key_span(sums.begin()->first), [](uint8_t*) {}, [](uint8_t*) {}), LayoutError);
}

TEST_CASE("random aggregate stream equals per-key fold oracle", "[hashtable]") {
    ReusableHashTable ht(HtKind::Aggregate, 8, 8);
    std::mt19937_64 rng(77);
    std::map<int64_t, int64_t> oracle;
    size_t inserts = 0;
    for (int i = 0; i < 20000; ++i) {
        int64_t k = int64_t(rng() % 500);
        int64_t add = int64_t(rng() % 100);
        bool ins = ht.update_aggregate(
            key_span(k), [&](uint8_t* s) { std::memcpy(s, &add, 8); },
            [&](uint8_t* s) {
                int64_t v;
                std::memcpy(&v, s, 8);
                v += add;
                std::memcpy(s, &v, 8);
            });
        if (ins) inserts++;
        oracle[k] += add;
    }
    CHECK(inserts == oracle.size());
    CHECK(ht.entry_count() == oracle.size());
    size_t seen = 0;
    ht.scan_entries([&](const uint8_t* k, const uint8_t* s, uint64_t) {
        int64_t key, v;
        std::memcpy(&key, k, 8);
        std::memcpy(&v, s, 8);
        REQUIRE(oracle.at(key) == v);
        seen++;
    });
    CHECK(seen == oracle.size());
    CHECK(ht.recount_bytes() == ht.ht_size_bytes());
}

TEST_CASE("tagging and retag", "[hashtable]") {
    ReusableHashTable ht(HtKind::SharedGrouping, 8, 8, /*tagged=*/true);
    for (int64_t i = 0; i < 100; ++i) ht.insert(key_span(i), key_span(i), /*tag=*/0b1);
    // all-true predicates -> all bits set, count = entry count
    size_t visited = ht.retag([](const uint8_t*, const uint8_t*) { return uint64_t(0b11); });
    CHECK(visited == 100);
    ht.scan_entries([&](const uint8_t*, const uint8_t*, uint64_t tag) { CHECK(tag == 0b11); });
    // all-false -> all bits clear
    ht.retag([](const uint8_t*, const uint8_t*) { return uint64_t(0); });
    ht.scan_entries([&](const uint8_t*, const uint8_t*, uint64_t tag) { CHECK(tag == 0); });
    // per-entry predicate evaluation
    ht.retag([](const uint8_t* key, const uint8_t*) {
        int64_t k;
        std::memcpy(&k, key, 8);
        return uint64_t(k % 2 == 0 ? 0b01 : 0b10);
    });
    ht.scan_entries([&](const uint8_t* key, const uint8_t*, uint64_t tag) {
        int64_t k;
        std::memcpy(&k, key, 8);
        CHECK(tag == uint64_t(k % 2 == 0 ? 0b01 : 0b10));
    });
    // untagged tables refuse retag
    ReusableHashTable plain(HtKind::JoinBuild, 8, 8);
    CHECK_THROWS_AS(plain.retag([](const uint8_t*, const uint8_t*) { return uint64_t(0); }), LayoutError);
}

TEST_CASE("scan_entries visits everything", "[hashtable]") {
    ReusableHashTable ht(HtKind::JoinBuild, 8, 8);
    CHECK(ht.entry_count() == 0);
    size_t n = 0;
    ht.scan_entries([&](const uint8_t*, const uint8_t*, uint64_t) { n++; });
    CHECK(n == 0);
    for (int64_t i = 0; i < 257; ++i) ht.insert(key_span(i), key_span(i));
    ht.scan_entries([&](const uint8_t*, const uint8_t*, uint64_t) { n++; });
    CHECK(n == 257);
}
