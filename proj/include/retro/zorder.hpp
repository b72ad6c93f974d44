#pragma once

#include <array>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <utility>

namespace retro {

inline constexpr int kMaxDims = 8;
inline constexpr uint8_t kDefaultCoordBits = 31;

/// A point of the unit cube [0,1)^d with w-bit fixed-point coordinates.
/// Coordinate value u encodes u / 2^w. Shifted copies may use the extra
/// headroom bit, so coordinates always fit in bits+1 <= 32 bits.
struct Point {
    std::array<uint32_t, kMaxDims> coords{};
    uint8_t dims = 1;
    uint8_t bits = kDefaultCoordBits;

    uint32_t operator[](int i) const { return coords[static_cast<size_t>(i)]; }
    uint32_t& operator[](int i) { return coords[static_cast<size_t>(i)]; }

    friend bool operator==(const Point& a, const Point& b) {
        if (a.dims != b.dims) return false;
        for (int i = 0; i < a.dims; ++i)
            if (a.coords[static_cast<size_t>(i)] != b.coords[static_cast<size_t>(i)]) return false;
        return true;
    }
    friend bool operator!=(const Point& a, const Point& b) { return !(a == b); }
};

inline Point make_point(std::initializer_list<uint32_t> cs, uint8_t bits = kDefaultCoordBits) {
    Point p;
    p.dims = static_cast<uint8_t>(cs.size());
    p.bits = bits;
    int i = 0;
    for (uint32_t c : cs) p.coords[static_cast<size_t>(i++)] = c;
    return p;
}

/// Interleaved key of up to d*(w+1) <= 256 bits. limb[0] is least significant.
struct ZKey {
    std::array<uint64_t, 4> limb{};

    void set_bit(int i) { limb[static_cast<size_t>(i >> 6)] |= uint64_t{1} << (i & 63); }
    bool bit(int i) const { return (limb[static_cast<size_t>(i >> 6)] >> (i & 63)) & 1u; }

    friend bool operator==(const ZKey& a, const ZKey& b) { return a.limb == b.limb; }
    friend bool operator!=(const ZKey& a, const ZKey& b) { return !(a == b); }
    friend bool operator<(const ZKey& a, const ZKey& b) {
        for (int i = 3; i >= 0; --i) {
            if (a.limb[static_cast<size_t>(i)] != b.limb[static_cast<size_t>(i)])
                return a.limb[static_cast<size_t>(i)] < b.limb[static_cast<size_t>(i)];
        }
        return false;
    }
    friend bool operator<=(const ZKey& a, const ZKey& b) { return !(b < a); }

    /// Value as u64; only meaningful when d*w <= 64 (tests).
    uint64_t low64() const { return limb[0]; }
};

/// True iff floor(log2 x) < floor(log2 y), with log2(0) treated as -1.
/// Uses only comparison and xor.
inline bool msb_less(uint64_t x, uint64_t y) {
    if (x > y) return false;
    return x < (x ^ y);
}

/// z-order comparison without materializing keys; O(d) word operations.
/// Equal points compare false both ways.
inline bool z_less(const Point& p, const Point& q) {
    assert(p.dims == q.dims);
    int best = 0;
    uint64_t best_xor = static_cast<uint64_t>(p.coords[0]) ^ q.coords[0];
    for (int j = 1; j < p.dims; ++j) {
        const uint64_t x = static_cast<uint64_t>(p.coords[static_cast<size_t>(j)]) ^
                           q.coords[static_cast<size_t>(j)];
        if (msb_less(best_xor, x)) {
            best = j;
            best_xor = x;
        }
    }
    return p.coords[static_cast<size_t>(best)] < q.coords[static_cast<size_t>(best)];
}

/// Bit-interleave of the coordinates: coordinate 0 contributes the most
/// significant bit of each group. `width` overrides the per-coordinate bit
/// count (shifted copies occupy bits+1).
inline ZKey shuffle(const Point& p, int width = 0) {
    const int w = width ? width : p.bits;
    ZKey k;
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < p.dims; ++i) {
            if ((p.coords[static_cast<size_t>(i)] >> j) & 1u)
                k.set_bit(j * p.dims + (p.dims - 1 - i));
        }
    }
    return k;
}

/// Per-axis offset of the j-th shifted copy: floor(j * 2^w / (d+1)).
inline uint32_t shift_offset(uint8_t bits, uint8_t dims, int j) {
    return static_cast<uint32_t>((static_cast<uint64_t>(j) << bits) / (dims + 1u));
}

/// p + v^(j): the same offset added to every axis. shift(p, 0) == p, and the
/// result fits in bits+1 bits per coordinate by construction.
inline Point shift(const Point& p, int j) {
    assert(j >= 0 && j <= p.dims);
    Point s = p;
    const uint32_t off = shift_offset(p.bits, p.dims, j);
    for (int i = 0; i < p.dims; ++i) s.coords[static_cast<size_t>(i)] += off;
    return s;
}

/// c = sqrt(d)*(4d+4) + 1, the candidate-set approximation constant.
inline double c_constant(int dims) {
    assert(dims >= 1);
    return std::sqrt(static_cast<double>(dims)) * (4.0 * dims + 4.0) + 1.0;
}

/// A dyadic cell of [0,1)^d: `level` fixed high-order bits per coordinate.
/// Level 0 is the whole cube; level w is a single grid point.
struct QuadCell {
    Point anchor;
    uint8_t level = 0;

    uint32_t side() const { return uint32_t{1} << (anchor.bits - level); }

    bool contains(const Point& p) const {
        const int sh = anchor.bits - level;
        for (int i = 0; i < anchor.dims; ++i) {
            if ((p.coords[static_cast<size_t>(i)] >> sh) !=
                (anchor.coords[static_cast<size_t>(i)] >> sh))
                return false;
        }
        return true;
    }

    /// Index of the child quadrant containing p; coordinate 0 is the most
    /// significant bit of the index, matching the interleave order.
    int child_index(const Point& p) const {
        const int sh = anchor.bits - level - 1;
        int q = 0;
        for (int i = 0; i < anchor.dims; ++i)
            q |= static_cast<int>((p.coords[static_cast<size_t>(i)] >> sh) & 1u)
                 << (anchor.dims - 1 - i);
        return q;
    }

    QuadCell child(int q) const {
        QuadCell c;
        c.anchor = anchor;
        c.level = static_cast<uint8_t>(level + 1);
        const int sh = anchor.bits - level - 1;
        for (int i = 0; i < anchor.dims; ++i) {
            if ((q >> (anchor.dims - 1 - i)) & 1)
                c.anchor.coords[static_cast<size_t>(i)] |= uint32_t{1} << sh;
        }
        return c;
    }

    friend bool operator==(const QuadCell& a, const QuadCell& b) {
        return a.level == b.level && a.anchor == b.anchor;
    }
};

/// Cell of exactly one grid point.
inline QuadCell point_cell(const Point& p) {
    QuadCell c;
    c.anchor = p;
    c.level = p.bits;
    return c;
}

/// Smallest cell level at which p and q fall into the same cell.
inline int common_cell_level(const Point& p, const Point& q) {
    int lvl = p.bits;
    for (int i = 0; i < p.dims; ++i) {
        const uint32_t x = p.coords[static_cast<size_t>(i)] ^ q.coords[static_cast<size_t>(i)];
        const int prefix = p.bits - std::bit_width(x);
        if (prefix < lvl) lvl = prefix;
    }
    return lvl;
}

/// Smallest cell containing both points.
inline QuadCell common_cell(const Point& p, const Point& q) {
    QuadCell c;
    c.level = static_cast<uint8_t>(common_cell_level(p, q));
    c.anchor = p;
    const int sh = p.bits - c.level;
    for (int i = 0; i < p.dims; ++i)
        c.anchor.coords[static_cast<size_t>(i)] =
            (p.coords[static_cast<size_t>(i)] >> sh) << sh;
    return c;
}

/// The minimum and maximum interleaved key of any grid point inside the cell:
/// cells are contiguous runs of the z-order.
inline std::pair<ZKey, ZKey> cell_interval(const QuadCell& c) {
    ZKey lo = shuffle(c.anchor);
    ZKey hi = lo;
    const int low_bits = c.anchor.dims * (c.anchor.bits - c.level);
    for (int i = 0; i < low_bits; ++i) hi.set_bit(i);
    return {lo, hi};
}

}  // namespace retro
