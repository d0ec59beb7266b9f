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

#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace reusedb {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unknown table/column, type mismatch at the catalog level.
struct SchemaError : EngineError {
    using EngineError::EngineError;
};

/// Row/entry byte width does not match the table layout.
struct LayoutError : EngineError {
    using EngineError::EngineError;
};

/// A predicate references an attribute the given tuple/entry does not carry.
struct AttributeUnavailable : EngineError {
    using EngineError::EngineError;
};

/// Planner invariant violated (disconnected graph, missing index, ...).
struct PlanningError : EngineError {
    using EngineError::EngineError;
};

/// Cache admission failed: everything pinned and still over budget.
struct AdmissionRefused : EngineError {
    using EngineError::EngineError;
};

/// Pin of an already-pinned cache entry.
struct EntryUnavailable : EngineError {
    using EngineError::EngineError;
};

struct ParseError : EngineError {
    using EngineError::EngineError;
};

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

/// Runtime value of any column. Dates are carried as int64 day numbers.
using Value = std::variant<int64_t, double, std::string>;

enum class ValueKind : uint8_t { Int, Real, Str };

inline ValueKind kind_of(const Value& v) {
    switch (v.index()) {
        case 0: return ValueKind::Int;
        case 1: return ValueKind::Real;
        default: return ValueKind::Str;
    }
}

/// Three-way compare of same-kind values. Mixed Int/Real compares numerically.
inline int compare_values(const Value& a, const Value& b) {
    if (a.index() == 2 || b.index() == 2) {
        if (a.index() != 2 || b.index() != 2) throw EngineError("cannot compare string with numeric");
        const auto& x = std::get<std::string>(a);
        const auto& y = std::get<std::string>(b);
        return x < y ? -1 : (x == y ? 0 : 1);
    }
    double x = a.index() == 0 ? double(std::get<int64_t>(a)) : std::get<double>(a);
    double y = b.index() == 0 ? double(std::get<int64_t>(b)) : std::get<double>(b);
    if (a.index() == 0 && b.index() == 0) {
        int64_t xi = std::get<int64_t>(a), yi = std::get<int64_t>(b);
        return xi < yi ? -1 : (xi == yi ? 0 : 1);
    }
    return x < y ? -1 : (x == y ? 0 : 1);
}

inline std::string value_to_string(const Value& v) {
    switch (v.index()) {
        case 0: return std::to_string(std::get<int64_t>(v));
        case 1: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(v));
            return buf;
        }
        default: return std::get<std::string>(v);
    }
}

// ---------------------------------------------------------------------------
// Column references
// ---------------------------------------------------------------------------

/// Fully qualified column name. The engine resolves aliases before this point.
struct ColRef {
    std::string table;
    std::string column;

    bool operator==(const ColRef&) const = default;
    auto operator<=>(const ColRef&) const = default;

    std::string str() const { return table + "." + column; }
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

/// 64-bit finalizer (splitmix64). Fixed seed keeps runs reproducible.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_bytes(const void* data, size_t len) {
    uint64_t h = 0x2545f4914f6cdd1dULL;
    if (len == 0) return h;
    const auto* p = static_cast<const uint8_t*>(data);
    while (len >= 8) {
        uint64_t w;
        std::memcpy(&w, p, 8);
        h = mix64(h ^ w);
        p += 8;
        len -= 8;
    }
    if (len > 0) {
        uint64_t w = 0;
        std::memcpy(&w, p, len);
        h = mix64(h ^ w);
    }
    return h;
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL)); }

// ---------------------------------------------------------------------------
// Dates (days since 1970-01-01, proleptic Gregorian)
// ---------------------------------------------------------------------------

inline int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return int64_t(era) * 146097 + int64_t(doe) - 719468;
}

inline void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yr = int64_t(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = int(doy - (153 * mp + 2) / 5 + 1);
    m = int(mp + (mp < 10 ? 3 : -9));
    y = int(yr + (m <= 2));
}

/// Parses "YYYY-MM-DD" into a day number.
inline std::optional<int64_t> parse_date(const std::string& s) {
    int y, m, d;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3) return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    return days_from_civil(y, m, d);
}

inline std::string format_date(int64_t days) {
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

}  // namespace reusedb
