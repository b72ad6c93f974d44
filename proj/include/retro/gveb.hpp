#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace retro {

using ColorSet = uint64_t;

inline ColorSet color_bit(int c) { return uint64_t{1} << c; }

/// View over a per-color key array: report(i, j) is the set of colors whose
/// entry lies in [i, j], computed with word operations over the live mask.
/// An update to one entry of the underlying array costs O(1).
struct RankIndex {
    const uint64_t* values = nullptr;
    ColorSet live = 0;

    ColorSet report(uint64_t i, uint64_t j) const {
        ColorSet out = 0;
        for (ColorSet m = live; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            const uint64_t v = values[c];
            if (i <= v && v <= j) out |= color_bit(c);
        }
        return out;
    }
};

inline ColorSet rank_report(const RankIndex& a, uint64_t i, uint64_t j) { return a.report(i, j); }

/// Generalized van Emde Boas tree over [2^universe_bits) where each element
/// is a (key, color) pair. Supports colored successor/predecessor, per-color
/// one-representative range reporting and full colored range reporting.
/// Recursion halves the bit count per level and bottoms out at single-word
/// bitsets; per-level color work is word-parallel over at most 64 colors.
/// Single writer; queries must not race mutation.
class GvebTree {
  public:
    /// universe_bits is rounded up to a power of two (minimum 4).
    GvebTree(int universe_bits, int ncolors);
    ~GvebTree();

    GvebTree(const GvebTree&) = delete;
    GvebTree& operator=(const GvebTree&) = delete;
    GvebTree(GvebTree&&) noexcept;
    GvebTree& operator=(GvebTree&&) noexcept;

    /// Throws std::invalid_argument on duplicate insert / missing delete.
    void insert(uint64_t key, int color);
    void erase(uint64_t key, int color);

    /// Minimum (key', color') with key' >= key and color' in cq.
    std::optional<std::pair<uint64_t, int>> find(uint64_t key, ColorSet cq) const;
    /// Maximum (key', color') with key' <= key and color' in cq.
    std::optional<std::pair<uint64_t, int>> find_prev(uint64_t key, ColorSet cq) const;

    /// For each color of cq with an element in [i, j], exactly one such
    /// element. Empty when i > j.
    std::vector<std::pair<uint64_t, int>> reportany(uint64_t i, uint64_t j, ColorSet cq) const;
    /// Every (key, color) with key in [i, j] and color in cq, exactly once.
    std::vector<std::pair<uint64_t, int>> report(uint64_t i, uint64_t j, ColorSet cq) const;

    bool contains(uint64_t key, int color) const;
    size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    int universe_bits() const { return bits_; }

    /// Rank views over the root's per-color minima / maxima.
    RankIndex min_rank() const;
    RankIndex max_rank() const;

    uint64_t levels_touched() const { return levels_touched_; }
    void reset_counter() { levels_touched_ = 0; }

  private:
    struct Node;
    struct KeyColor {
        uint64_t key;
        int color;
        friend bool operator==(const KeyColor&, const KeyColor&) = default;
    };
    struct KeyColorHash {
        size_t operator()(const KeyColor& kc) const {
            uint64_t h = kc.key * 0x9e3779b97f4a7c15ull + static_cast<uint64_t>(kc.color);
            h ^= h >> 29;
            return static_cast<size_t>(h * 0xbf58476d1ce4e5b9ull);
        }
    };
    struct Links {
        uint64_t prev, next;
    };
    static constexpr uint64_t kNone = ~uint64_t{0};

    int bits_;
    int ncolors_;
    size_t size_ = 0;
    std::unique_ptr<Node> root_;
    std::unordered_map<KeyColor, Links, KeyColorHash> links_;
    mutable uint64_t levels_touched_ = 0;

    void insert_rec(Node& n, uint64_t key, int color);
    void erase_rec(Node& n, uint64_t key, int color);
    std::optional<std::pair<uint64_t, int>> find_rec(const Node& n, uint64_t key,
                                                     ColorSet cq) const;
    std::optional<std::pair<uint64_t, int>> find_prev_rec(const Node& n, uint64_t key,
                                                          ColorSet cq) const;
    void reportany_rec(const Node& n, uint64_t i, uint64_t j, ColorSet& cq, uint64_t prefix,
                       std::vector<std::pair<uint64_t, int>>& out) const;
};

}  // namespace retro
