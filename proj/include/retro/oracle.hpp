#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "retro/zorder.hpp"

namespace retro::oracle {

/// Flat reference timeline: every answer is computed by a linear scan.
/// Deliberately shares no search code with the main structures; the
/// bit-interleave and distance arithmetic here are written independently.
struct NaiveTimeline {
    struct Entry {
        Point p;
        long long t_start = 0;
        long long t_end = 0;  // half-open; kInfinity for open-ended
        uint64_t handle = 0;
    };

    static constexpr long long kInfinity = INT64_MAX;

    std::vector<Entry> entries;

    void add(const Point& p, long long t_start, long long t_end, uint64_t handle) {
        entries.push_back({p, t_start, t_end, handle});
    }
    void remove(uint64_t handle) {
        for (size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].handle == handle) {
                entries.erase(entries.begin() + static_cast<ptrdiff_t>(i));
                return;
            }
        }
    }

    std::vector<Entry> alive_at(long long t) const {
        std::vector<Entry> out;
        for (const Entry& e : entries)
            if (e.t_start <= t && t < e.t_end) out.push_back(e);
        return out;
    }

    /// All entries alive at t with squared distance * r_den2 <= r_num2
    /// (exact integer comparison against a rational radius squared).
    std::vector<Entry> exact_range(const Point& q, unsigned __int128 r2_num,
                                   unsigned __int128 r2_den, long long t) const {
        std::vector<Entry> out;
        for (const Entry& e : entries) {
            if (!(e.t_start <= t && t < e.t_end)) continue;
            if (sq_dist(e.p, q) * r2_den <= r2_num) out.push_back(e);
        }
        return out;
    }

    /// Nearest alive entry by (squared distance, handle).
    std::optional<Entry> exact_nn(const Point& q, long long t) const {
        std::optional<Entry> best;
        unsigned __int128 best_d = 0;
        for (const Entry& e : entries) {
            if (!(e.t_start <= t && t < e.t_end)) continue;
            const unsigned __int128 d = sq_dist(e.p, q);
            if (!best || d < best_d || (d == best_d && e.handle < best->handle)) {
                best = e;
                best_d = d;
            }
        }
        return best;
    }

    static unsigned __int128 sq_dist(const Point& a, const Point& b) {
        unsigned __int128 s = 0;
        for (int i = 0; i < a.dims; ++i) {
            const int64_t d = static_cast<int64_t>(a.coords[static_cast<size_t>(i)]) -
                              static_cast<int64_t>(b.coords[static_cast<size_t>(i)]);
            s += static_cast<unsigned __int128>(d * d);
        }
        return s;
    }
};

/// Interleaved key materialized as an explicit bit string, most significant
/// bit first. Distinct from the word-packed ZKey on purpose.
inline std::vector<uint8_t> ref_shuffle_bits(const Point& p, int width) {
    std::vector<uint8_t> bits;
    bits.reserve(static_cast<size_t>(width * p.dims));
    for (int j = width - 1; j >= 0; --j)
        for (int i = 0; i < p.dims; ++i)
            bits.push_back(static_cast<uint8_t>((p.coords[static_cast<size_t>(i)] >> j) & 1u));
    return bits;
}

/// Sorts points by the materialized interleave of their j-th shifted copy;
/// ties keep input order (stable).
inline std::vector<Point> ref_z_sort(std::vector<Point> points, int j) {
    std::vector<std::pair<std::vector<uint8_t>, size_t>> keyed;
    keyed.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        Point s = points[i];
        const uint32_t off =
            static_cast<uint32_t>((static_cast<uint64_t>(j) << s.bits) / (s.dims + 1u));
        for (int c = 0; c < s.dims; ++c) s.coords[static_cast<size_t>(c)] += off;
        keyed.emplace_back(ref_shuffle_bits(s, s.bits + 1), i);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Point> out;
    out.reserve(points.size());
    for (const auto& [k, i] : keyed) out.push_back(points[i]);
    return out;
}

}  // namespace retro::oracle
