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

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reusedb/hashtable.hpp"

namespace reusedb {

enum class CalibOp : uint8_t { Insert = 0, Lookup = 1, Update = 2 };

inline const char* calib_op_name(CalibOp op) {
    switch (op) {
        case CalibOp::Insert: return "insert";
        case CalibOp::Lookup: return "lookup";
        default: return "update";
    }
}

struct CacheGeometry {
    size_t l1 = 32 * 1024;
    size_t l2 = 1024 * 1024;
    size_t l3 = 32 * 1024 * 1024;
};

inline CacheGeometry detect_caches() {
    CacheGeometry g;
    long v;
#ifdef _SC_LEVEL1_DCACHE_SIZE
    if ((v = sysconf(_SC_LEVEL1_DCACHE_SIZE)) > 0) g.l1 = size_t(v);
#endif
#ifdef _SC_LEVEL2_CACHE_SIZE
    if ((v = sysconf(_SC_LEVEL2_CACHE_SIZE)) > 0) g.l2 = size_t(v);
#endif
#ifdef _SC_LEVEL3_CACHE_SIZE
    if ((v = sysconf(_SC_LEVEL3_CACHE_SIZE)) > 0) g.l3 = size_t(v);
#endif
    return g;
}

inline std::string machine_fingerprint() {
    std::string model = "unknown-cpu";
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find("model name");
        if (pos != std::string::npos) {
            auto colon = line.find(':');
            if (colon != std::string::npos) {
                model = line.substr(colon + 1);
                while (!model.empty() && model.front() == ' ') model.erase(model.begin());
            }
            break;
        }
    }
    CacheGeometry g = detect_caches();
    return model + " L1d=" + std::to_string(g.l1 / 1024) + "K L2=" + std::to_string(g.l2 / 1024) +
           "K L3=" + std::to_string(g.l3 / 1024) + "K";
}

/// Measured per-operation costs over a (htSize x tWidth) grid, bilinearly
/// interpolated in log space, plus two scalar bandwidth figures used for
/// resize and scan estimates. Machine-dependent by design: consumers should
/// only rely on shape, never on absolute nanoseconds.
class CalibrationTable {
  public:
    CalibrationTable() = default;

    CalibrationTable(std::vector<double> sizes, std::vector<double> widths)
        : sizes_(std::move(sizes)), widths_(std::move(widths)) {
        for (auto& g : grid_) g.assign(sizes_.size() * widths_.size(), 0.0);
    }

    bool empty() const { return sizes_.empty() || widths_.empty(); }
    const std::vector<double>& sizes() const { return sizes_; }
    const std::vector<double>& widths() const { return widths_; }
    const std::string& fingerprint() const { return fingerprint_; }
    void set_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

    double write_ns_per_byte() const { return write_ns_per_byte_; }
    double scan_ns_per_byte() const { return scan_ns_per_byte_; }
    void set_write_ns_per_byte(double v) { write_ns_per_byte_ = v; }
    void set_scan_ns_per_byte(double v) { scan_ns_per_byte_ = v; }

    void set(CalibOp op, size_t si, size_t wi, double ns) { grid_[size_t(op)][si * widths_.size() + wi] = ns; }

    double at(CalibOp op, size_t si, size_t wi) const { return grid_[size_t(op)][si * widths_.size() + wi]; }

    /// Bilinear interpolation in (log2 htSize, log2 tWidth); clamps to the
    /// grid hull outside it.
    double interpolate(CalibOp op, double ht_bytes, double t_width) const {
        if (empty()) throw EngineError("calibration table is empty");
        double x = std::log2(std::max(1.0, ht_bytes));
        double y = std::log2(std::max(1.0, t_width));
        auto [si, sx] = locate(sizes_, x);
        auto [wi, wx] = locate(widths_, y);
        const auto& g = grid_[size_t(op)];
        const size_t W = widths_.size();
        double v00 = g[si * W + wi];
        double v01 = g[si * W + std::min(wi + 1, W - 1)];
        double v10 = g[std::min(si + 1, sizes_.size() - 1) * W + wi];
        double v11 = g[std::min(si + 1, sizes_.size() - 1) * W + std::min(wi + 1, W - 1)];
        double v0 = v00 + (v01 - v00) * wx;
        double v1 = v10 + (v11 - v10) * wx;
        return v0 + (v1 - v0) * sx;
    }

    void save_csv(std::ostream& os) const {
        os << "operation,htSize,tWidth,ns_per_op\n";
        for (size_t op = 0; op < 3; ++op) {
            for (size_t si = 0; si < sizes_.size(); ++si) {
                for (size_t wi = 0; wi < widths_.size(); ++wi) {
                    os << calib_op_name(CalibOp(op)) << "," << uint64_t(sizes_[si]) << "," << uint64_t(widths_[wi])
                       << "," << at(CalibOp(op), si, wi) << "\n";
                }
            }
        }
        os << "write_bw,0,0," << write_ns_per_byte_ << "\n";
        os << "scan_bw,0,0," << scan_ns_per_byte_ << "\n";
        os << "# machine," << fingerprint_ << "\n";
    }

    void save_csv_file(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw EngineError("cannot write calibration file " + path);
        save_csv(os);
    }

    static CalibrationTable load_csv(std::istream& is) {
        std::string line;
        if (!std::getline(is, line)) throw EngineError("empty calibration file");
        std::map<std::pair<double, double>, std::array<double, 3>> cells;
        double wbw = 0, sbw = 0;
        std::string fp;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            if (line.rfind("# machine,", 0) == 0) {
                fp = line.substr(10);
                continue;
            }
            std::stringstream ss(line);
            std::string op, s, w, ns;
            std::getline(ss, op, ',');
            std::getline(ss, s, ',');
            std::getline(ss, w, ',');
            std::getline(ss, ns, ',');
            double nsv = std::stod(ns);
            if (op == "write_bw") {
                wbw = nsv;
                continue;
            }
            if (op == "scan_bw") {
                sbw = nsv;
                continue;
            }
            int opi = op == "insert" ? 0 : (op == "lookup" ? 1 : 2);
            cells[{std::stod(s), std::stod(w)}][size_t(opi)] = nsv;
        }
        if (cells.empty()) throw EngineError("calibration file has no grid rows");
        std::vector<double> sizes, widths;
        for (auto& [key, _] : cells) {
            sizes.push_back(key.first);
            widths.push_back(key.second);
        }
        std::sort(sizes.begin(), sizes.end());
        sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
        std::sort(widths.begin(), widths.end());
        widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
        CalibrationTable t(sizes, widths);
        for (auto& [key, ops] : cells) {
            size_t si = size_t(std::lower_bound(sizes.begin(), sizes.end(), key.first) - sizes.begin());
            size_t wi = size_t(std::lower_bound(widths.begin(), widths.end(), key.second) - widths.begin());
            for (size_t op = 0; op < 3; ++op) t.set(CalibOp(op), si, wi, ops[op]);
        }
        t.write_ns_per_byte_ = wbw;
        t.scan_ns_per_byte_ = sbw;
        t.fingerprint_ = fp;
        return t;
    }

    static CalibrationTable load_csv_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw EngineError("cannot read calibration file " + path);
        return load_csv(is);
    }

  private:
    // Returns (cell index, fraction toward the next grid line), clamped.
    static std::pair<size_t, double> locate(const std::vector<double>& axis, double logv) {
        if (axis.size() == 1) return {0, 0.0};
        double first = std::log2(axis.front());
        double last = std::log2(axis.back());
        if (logv <= first) return {0, 0.0};
        if (logv >= last) return {axis.size() - 1, 0.0};
        size_t i = 0;
        while (i + 1 < axis.size() && std::log2(axis[i + 1]) < logv) ++i;
        double lo = std::log2(axis[i]), hi = std::log2(axis[i + 1]);
        return {i, (logv - lo) / (hi - lo)};
    }

    std::vector<double> sizes_;   // htSize grid, bytes
    std::vector<double> widths_;  // tWidth grid, bytes
    std::array<std::vector<double>, 3> grid_;
    double write_ns_per_byte_ = 0.1;
    double scan_ns_per_byte_ = 0.1;
    std::string fingerprint_;
};

// ---------------------------------------------------------------------------
// Micro benchmarks
// ---------------------------------------------------------------------------

namespace calib_detail {

using Clock = std::chrono::steady_clock;

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

/// Entries needed so the table's htSize lands near `target_bytes`.
inline size_t entries_for_size(size_t target_bytes, uint32_t node_bytes) {
    // ~8/0.75 directory bytes amortized per entry
    double per_entry = double(node_bytes) + 8.0 / ReusableHashTable::kMaxLoadFactor;
    return std::max<size_t>(16, size_t(double(target_bytes) / per_entry));
}

inline void fill_key(uint8_t* key, uint64_t k) { std::memcpy(key, &k, 8); }

struct PointTimings {
    double insert_ns = 0, lookup_ns = 0, update_ns = 0;
};

/// Measures one (size, width) grid point with `reps` timed runs per operation
/// and medians kept. Large tables are built once and timed in slices; small
/// tables are rebuilt until enough operations accumulate so coarse timers
/// cannot distort the result.
inline PointTimings measure_point(size_t target_bytes, uint32_t width, size_t reps, uint64_t seed) {
    if (width < 8) throw EngineError("tuple width below 8B key");
    reps = std::max<size_t>(1, reps);
    const uint32_t payload = width - 8;
    const uint32_t node = ReusableHashTable(HtKind::JoinBuild, 8, payload).node_bytes();
    const size_t n = entries_for_size(target_bytes, node);
    const size_t min_ops = 4096;
    const size_t probe_ops = std::clamp<size_t>(n, min_ops, 1u << 18);

    std::mt19937_64 rng(mix64(seed));
    std::vector<uint64_t> keys(n);
    for (size_t i = 0; i < n; ++i) keys[i] = mix64(uint64_t(i) * 0x9e3779b97f4a7c15ULL + seed);
    std::shuffle(keys.begin(), keys.end(), rng);

    std::vector<uint8_t> payload_buf(payload, 0xab);
    std::vector<uint8_t> sink(std::max<uint32_t>(payload, 8), 0);
    uint8_t key_buf[8];
    uint64_t guard = 0;

    PointTimings out;
    std::vector<double> ins_runs, look_runs, upd_runs;

    ReusableHashTable ht(HtKind::JoinBuild, 8, payload);
    ht.resize(n);
    if (n / 4 >= reps * min_ops) {
        // Build once; the last quarter of the build is split into timed slices.
        size_t warm = n - n / 4;
        for (size_t i = 0; i < warm; ++i) {
            fill_key(key_buf, keys[i]);
            ht.insert({key_buf, 8}, payload_buf);
        }
        size_t slice = (n - warm) / reps;
        for (size_t rep = 0; rep < reps; ++rep) {
            size_t begin = warm + rep * slice;
            size_t end = (rep + 1 == reps) ? n : begin + slice;
            auto t0 = Clock::now();
            for (size_t i = begin; i < end; ++i) {
                fill_key(key_buf, keys[i]);
                ht.insert({key_buf, 8}, payload_buf);
            }
            auto t1 = Clock::now();
            ins_runs.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / double(end - begin));
        }
    } else {
        // Small table: rebuild repeatedly, timing the last quarter each time.
        for (size_t rep = 0; rep < reps; ++rep) {
            double total = 0;
            size_t ops = 0;
            while (ops < min_ops) {
                ReusableHashTable fresh(HtKind::JoinBuild, 8, payload);
                fresh.resize(n);
                size_t warm = n - std::max<size_t>(1, n / 4);
                for (size_t i = 0; i < warm; ++i) {
                    fill_key(key_buf, keys[i]);
                    fresh.insert({key_buf, 8}, payload_buf);
                }
                auto t0 = Clock::now();
                for (size_t i = warm; i < n; ++i) {
                    fill_key(key_buf, keys[i]);
                    fresh.insert({key_buf, 8}, payload_buf);
                }
                auto t1 = Clock::now();
                total += std::chrono::duration<double, std::nano>(t1 - t0).count();
                ops += n - warm;
            }
            ins_runs.push_back(total / double(ops));
        }
        // Rebuild the shared table for the probe phases below.
        for (size_t i = 0; i < n; ++i) {
            fill_key(key_buf, keys[i]);
            ht.insert({key_buf, 8}, payload_buf);
        }
    }

    // Lookups: randomized key order, payload copied out like a probe would.
    std::vector<uint64_t> order = keys;
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t rep = 0; rep < reps; ++rep) {
        size_t ops = 0;
        double elapsed = 0;
        auto t0 = Clock::now();
        while (ops < probe_ops || elapsed < 50000.0) {
            size_t block = std::min(order.size(), probe_ops);
            for (size_t i = 0; i < block; ++i) {
                fill_key(key_buf, order[(ops + i) % order.size()]);
                ht.for_each_match({key_buf, 8}, [&](uint8_t* p, uint64_t*) {
                    if (payload) std::memcpy(sink.data(), p, payload);
                    guard += sink[0];
                });
            }
            ops += block;
            elapsed = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
        }
        look_runs.push_back(elapsed / double(ops));
    }

    // Updates: aggregate table with identical geometry, 8B state fold.
    {
        ReusableHashTable agg(HtKind::Aggregate, 8, payload);
        agg.resize(n);
        auto init = [](uint8_t* s) { std::memset(s, 0, 8); };
        auto nothing = [](uint8_t*) {};
        for (size_t i = 0; i < n; ++i) {
            fill_key(key_buf, keys[i]);
            if (payload) agg.update_aggregate({key_buf, 8}, init, nothing);
            else agg.update_aggregate({key_buf, 8}, nothing, nothing);
        }
        std::shuffle(order.begin(), order.end(), rng);
        auto fold = [payload](uint8_t* s) {
            if (payload) {
                int64_t v;
                std::memcpy(&v, s, 8);
                v += 3;
                std::memcpy(s, &v, 8);
            }
        };
        for (size_t rep = 0; rep < reps; ++rep) {
            size_t ops = 0;
            double elapsed = 0;
            auto t0 = Clock::now();
            while (ops < probe_ops || elapsed < 50000.0) {
                size_t block = std::min(order.size(), probe_ops);
                for (size_t i = 0; i < block; ++i) {
                    fill_key(key_buf, order[(ops + i) % order.size()]);
                    agg.update_aggregate({key_buf, 8}, nothing, fold);
                }
                ops += block;
                elapsed = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
            }
            upd_runs.push_back(elapsed / double(ops));
        }
    }

    if (guard == 0xdeadbeefcafeULL) std::fprintf(stderr, "!");
    out.insert_ns = median(ins_runs);
    out.lookup_ns = median(look_runs);
    out.update_ns = median(upd_runs);
    return out;
}

/// Sequential store bandwidth (ns/byte), used to price directory allocation.
inline double measure_write_bandwidth() {
    const size_t bytes = 64u << 20;
    std::vector<uint8_t> buf(bytes, 0);
    std::vector<double> runs;
    for (int rep = 0; rep < 5; ++rep) {
        auto t0 = Clock::now();
        std::memset(buf.data(), rep + 1, bytes);
        auto t1 = Clock::now();
        runs.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / double(bytes));
    }
    if (buf[123] == 0xff) std::fprintf(stderr, "!");
    return median(runs);
}

/// Sequential read bandwidth with a trivial per-value check (ns/byte); prices
/// table scans.
inline double measure_scan_bandwidth() {
    const size_t n = (64u << 20) / 8;
    std::vector<int64_t> buf(n);
    for (size_t i = 0; i < n; ++i) buf[i] = int64_t(i);
    std::vector<double> runs;
    int64_t guard = 0;
    for (int rep = 0; rep < 5; ++rep) {
        auto t0 = Clock::now();
        int64_t cnt = 0;
        for (size_t i = 0; i < n; ++i) cnt += (buf[i] > 17) ? 1 : 0;
        auto t1 = Clock::now();
        guard += cnt;
        runs.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / double(n * 8));
    }
    if (guard == -1) std::fprintf(stderr, "!");
    return median(runs);
}

}  // namespace calib_detail

inline std::vector<double> default_calibration_sizes() {
    std::vector<double> sizes;
    for (double s = 1024; s <= 1024.0 * 1024 * 1024; s *= 4) sizes.push_back(s);
    return sizes;
}

inline std::vector<double> default_calibration_widths() { return {8, 16, 32, 64, 128, 256}; }

/// Runs the per-operation micro benchmarks over the given grid. Warm-up pass
/// first, then `repetitions` timed runs per point with medians kept.
inline CalibrationTable run_calibration(const std::vector<double>& sizes, const std::vector<double>& widths,
                                        size_t repetitions = 5, uint64_t seed = 42, bool progress = false) {
    if (sizes.empty() || widths.empty()) throw EngineError("calibration grid must be nonempty");
    std::vector<double> ss = sizes, ws = widths;
    std::sort(ss.begin(), ss.end());
    std::sort(ws.begin(), ws.end());
    CalibrationTable table(ss, ws);
    calib_detail::measure_point(size_t(ss.front()), uint32_t(ws.front()), 1, seed ^ 1);  // warm-up
    for (size_t si = 0; si < ss.size(); ++si) {
        for (size_t wi = 0; wi < ws.size(); ++wi) {
            auto t = calib_detail::measure_point(size_t(ss[si]), uint32_t(ws[wi]), repetitions, seed + si * 131 + wi);
            table.set(CalibOp::Insert, si, wi, t.insert_ns);
            table.set(CalibOp::Lookup, si, wi, t.lookup_ns);
            table.set(CalibOp::Update, si, wi, t.update_ns);
            if (progress)
                std::fprintf(stderr, "calibrated htSize=%zu tWidth=%zu: i=%.1f l=%.1f u=%.1f ns\n", size_t(ss[si]),
                             size_t(ws[wi]), t.insert_ns, t.lookup_ns, t.update_ns);
        }
    }
    table.set_write_ns_per_byte(calib_detail::measure_write_bandwidth());
    table.set_scan_ns_per_byte(calib_detail::measure_scan_bandwidth());
    table.set_fingerprint(machine_fingerprint());
    return table;
}

/// Synthetic table for tests that must not depend on measurement noise: costs
/// grow smoothly with size and step up at cache boundaries.
inline CalibrationTable synthetic_calibration() {
    auto sizes = default_calibration_sizes();
    auto widths = default_calibration_widths();
    CalibrationTable t(sizes, widths);
    CacheGeometry g = detect_caches();
    for (size_t si = 0; si < sizes.size(); ++si) {
        for (size_t wi = 0; wi < widths.size(); ++wi) {
            double s = sizes[si], w = widths[wi];
            double level = 1.0 + (s > double(g.l1) ? 1.0 : 0.0) + (s > double(g.l2) ? 2.0 : 0.0) +
                           (s > double(g.l3) ? 4.0 : 0.0);
            double wfac = 1.0 + std::max(0.0, std::log2(w / 64.0)) * 0.4;
            t.set(CalibOp::Insert, si, wi, 8.0 * level * wfac);
            t.set(CalibOp::Lookup, si, wi, 6.0 * level * (1.0 + std::max(0.0, std::log2(w / 128.0)) * 0.4));
            t.set(CalibOp::Update, si, wi, 7.0 * level * wfac);
        }
    }
    t.set_write_ns_per_byte(0.12);
    t.set_scan_ns_per_byte(0.15);
    t.set_fingerprint("synthetic");
    return t;
}

}  // namespace reusedb
