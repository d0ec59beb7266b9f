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
#include <random>
#include <string>
#include <vector>

#include "reusedb/table.hpp"

namespace reusedb {

/// Synthetic star schema with TPC-H-like cardinality ratios:
/// orders = 10x customer, lineitem ~ 4x orders, part = 2x customer,
/// supplier = customer/15. Dates span a fixed 7-year window so range
/// predicates have predictable selectivity.
namespace datagen {

inline constexpr int64_t kBaseCustomers = 150000;  // at scale 1.0
inline const int64_t kDateLo = days_from_civil(1992, 1, 1);
inline const int64_t kDateHi = days_from_civil(1998, 12, 31);  // inclusive
inline constexpr int kMaxShipLagDays = 121;

inline const std::vector<std::string> kSegments = {"AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY"};

inline std::string brand_name(int m, int b) { return "Brand#" + std::to_string(m) + std::to_string(b); }
inline std::string mfgr_name(int m) { return "Manufacturer#" + std::to_string(m); }

inline Schema customer_schema() {
    Schema s;
    s.table = "customer";
    s.columns = {{"c_custkey", ColumnType::Int64, 8},   {"c_mktsegment", ColumnType::FixedStr, 12},
                 {"c_nationkey", ColumnType::Int64, 8}, {"c_age", ColumnType::Int64, 8},
                 {"c_acctbal", ColumnType::Float64, 8}};
    s.primary_key = "c_custkey";
    return s;
}

inline Schema orders_schema() {
    Schema s;
    s.table = "orders";
    s.columns = {{"o_orderkey", ColumnType::Int64, 8},
                 {"o_custkey", ColumnType::Int64, 8},
                 {"o_orderdate", ColumnType::Date32, 4},
                 {"o_shippriority", ColumnType::Int64, 8},
                 {"o_totalprice", ColumnType::Float64, 8}};
    s.primary_key = "o_orderkey";
    s.foreign_keys = {{"o_custkey", "customer", "c_custkey"}};
    return s;
}

inline Schema lineitem_schema() {
    Schema s;
    s.table = "lineitem";
    s.columns = {{"l_lineid", ColumnType::Int64, 8},    {"l_orderkey", ColumnType::Int64, 8},
                 {"l_partkey", ColumnType::Int64, 8},   {"l_suppkey", ColumnType::Int64, 8},
                 {"l_shipdate", ColumnType::Date32, 4}, {"l_quantity", ColumnType::Int64, 8},
                 {"l_extendedprice", ColumnType::Float64, 8}};
    s.primary_key = "l_lineid";
    s.foreign_keys = {{"l_orderkey", "orders", "o_orderkey"},
                      {"l_partkey", "part", "p_partkey"},
                      {"l_suppkey", "supplier", "s_suppkey"}};
    return s;
}

inline Schema part_schema() {
    Schema s;
    s.table = "part";
    s.columns = {{"p_partkey", ColumnType::Int64, 8},
                 {"p_brand", ColumnType::FixedStr, 10},
                 {"p_mfgr", ColumnType::FixedStr, 16},
                 {"p_size", ColumnType::Int64, 8},
                 {"p_retailprice", ColumnType::Float64, 8}};
    s.primary_key = "p_partkey";
    return s;
}

inline Schema supplier_schema() {
    Schema s;
    s.table = "supplier";
    s.columns = {{"s_suppkey", ColumnType::Int64, 8},
                 {"s_nationkey", ColumnType::Int64, 8},
                 {"s_acctbal", ColumnType::Float64, 8}};
    s.primary_key = "s_suppkey";
    return s;
}

/// Columns the workload generator can mutate; these carry secondary indexes.
inline std::vector<std::string> indexed_columns(const std::string& table) {
    if (table == "customer") return {"c_mktsegment", "c_age"};
    if (table == "orders") return {"o_orderdate"};
    if (table == "lineitem") return {"l_shipdate"};
    if (table == "part") return {"p_size", "p_brand"};
    return {};
}

}  // namespace datagen

/// Deterministic for a fixed (scale, seed); per-table generators are seeded
/// independently so table contents do not depend on generation order.
inline Database generate_dataset(double scale, uint64_t seed) {
    using namespace datagen;
    if (!(scale > 0)) throw EngineError("scale must be positive");
    Database db;

    auto count = [scale](int64_t base) { return std::max<int64_t>(1, int64_t(std::ceil(double(base) * scale))); };
    const int64_t n_customer = count(kBaseCustomers);
    const int64_t n_orders = n_customer * 10;
    const int64_t n_part = n_customer * 2;
    const int64_t n_supplier = std::max<int64_t>(1, int64_t(std::ceil(double(n_customer) / 15.0)));

    {
        std::mt19937_64 rng(mix64(seed ^ hash_bytes("customer", 8)));
        Table t(customer_schema());
        for (int64_t i = 0; i < n_customer; ++i) {
            t.append_row({int64_t(i + 1), Value(kSegments[rng() % kSegments.size()]),
                          int64_t(rng() % 25), int64_t(18 + rng() % 75),
                          double(rng() % 1000000) / 100.0});
        }
        t.finalize(indexed_columns("customer"));
        db.add(std::move(t));
    }
    {
        std::mt19937_64 rng(mix64(seed ^ hash_bytes("orders", 6)));
        Table t(orders_schema());
        const int64_t span = kDateHi - kDateLo - kMaxShipLagDays;
        for (int64_t i = 0; i < n_orders; ++i) {
            t.append_row({int64_t(i + 1), int64_t(1 + rng() % uint64_t(n_customer)),
                          kDateLo + int64_t(rng() % uint64_t(span + 1)), int64_t(rng() % 2),
                          double(1000 + rng() % 50000000) / 100.0});
        }
        t.finalize(indexed_columns("orders"));
        db.add(std::move(t));
    }
    {
        std::mt19937_64 rng(mix64(seed ^ hash_bytes("part", 4)));
        Table t(part_schema());
        for (int64_t i = 0; i < n_part; ++i) {
            int m = 1 + int(rng() % 5);
            int b = 1 + int(rng() % 5);
            t.append_row({int64_t(i + 1), Value(brand_name(m, b)), Value(mfgr_name(m)),
                          int64_t(1 + rng() % 50), double(90000 + rng() % 1100000) / 100.0});
        }
        t.finalize(indexed_columns("part"));
        db.add(std::move(t));
    }
    {
        std::mt19937_64 rng(mix64(seed ^ hash_bytes("supplier", 8)));
        Table t(supplier_schema());
        for (int64_t i = 0; i < n_supplier; ++i) {
            t.append_row({int64_t(i + 1), int64_t(rng() % 25), double(rng() % 1000000) / 100.0});
        }
        t.finalize(indexed_columns("supplier"));
        db.add(std::move(t));
    }
    {
        // lineitem last: ship dates derive from the order dates generated above.
        std::mt19937_64 rng(mix64(seed ^ hash_bytes("lineitem", 8)));
        const Table& orders = db.table("orders");
        Table t(lineitem_schema());
        int64_t lineid = 1;
        for (int64_t o = 0; o < n_orders; ++o) {
            int64_t odate = std::get<int64_t>(orders.value(size_t(o), 2));
            int items = 1 + int(rng() % 7);
            for (int k = 0; k < items; ++k) {
                t.append_row({lineid++, int64_t(o + 1), int64_t(1 + rng() % uint64_t(n_part)),
                              int64_t(1 + rng() % uint64_t(n_supplier)),
                              odate + int64_t(1 + rng() % kMaxShipLagDays), int64_t(1 + rng() % 50),
                              double(100 + rng() % 10000000) / 100.0});
            }
        }
        t.finalize(indexed_columns("lineitem"));
        db.add(std::move(t));
    }
    return db;
}

}  // namespace reusedb
