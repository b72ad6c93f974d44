#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "retro/frac.hpp"
#include "retro/zorder.hpp"

namespace retro {

struct PointKey {
    std::array<uint32_t, kMaxDims> coords{};
    friend bool operator==(const PointKey&, const PointKey&) = default;
};

struct CellKey {
    std::array<uint32_t, kMaxDims> prefix{};
    uint8_t level = 0;
    friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct PointKeyHash {
    size_t operator()(const PointKey& k) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (uint32_t c : k.coords) h = (h ^ c) * 0x100000001b3ull;
        return static_cast<size_t>(h);
    }
};

struct CellKeyHash {
    size_t operator()(const CellKey& k) const {
        uint64_t h = (0xcbf29ce484222325ull ^ k.level) * 0x100000001b3ull;
        for (uint32_t c : k.prefix) h = (h ^ c) * 0x100000001b3ull;
        return static_cast<size_t>(h);
    }
};

struct QNode {
    QuadCell cell;
    QNode* parent = nullptr;
    bool is_leaf = false;
    Point point;                    // leaves
    std::vector<uint64_t> handles;  // leaves
    // children sorted by quadrant index; iteration order is z-order
    std::vector<std::pair<int, QNode*>> kids;

    QNode* child_at(int q) const {
        for (const auto& [idx, n] : kids)
            if (idx == q) return n;
        return nullptr;
    }
};

/// Compressed quadtree over every distinct point location, with randomized
/// skip levels: level 0 holds all locations, level i an independent
/// half-sample of level i-1. Single writer; reads must not race mutation.
class SkipQuadtree {
  public:
    SkipQuadtree(uint8_t dims, uint8_t bits, uint64_t seed = 0x9e3779b97f4a7c15ull)
        : dims_(dims), bits_(bits), rng_(seed) {
        levels_.emplace_back();
    }
    ~SkipQuadtree();

    SkipQuadtree(const SkipQuadtree&) = delete;
    SkipQuadtree& operator=(const SkipQuadtree&) = delete;

    /// Adds a handle at p; duplicate locations share one leaf.
    void insert(const Point& p, uint64_t handle);
    /// Removes one handle; the leaf disappears when its handle set empties.
    /// Throws std::invalid_argument if (p, handle) is not present.
    void erase(const Point& p, uint64_t handle);

    /// Deepest level-0 node whose cell contains p (a leaf counts only when it
    /// stores p itself); nullptr on an empty tree or when p lies outside the
    /// root's cell.
    const QNode* locate(const Point& p) const;

    struct InnerCell {
        QuadCell cell;
        const QNode* node;
    };

    /// Disjoint tree cells covering every stored location within distance r
    /// of q, each returned cell entirely within (1+eps)*r of q. Radius and
    /// tolerance are passed squared (grid units) for exact classification.
    std::vector<InnerCell> inner_cells(const Point& q, const Frac& r2, const Frac& eps2) const;

    /// z-order minimum and maximum stored locations in the subtree.
    /// Throws std::invalid_argument on an empty cell.
    std::pair<Point, Point> cell_extremes(const QNode* node) const;
    std::pair<Point, Point> cell_extremes(const QuadCell& cell) const;

    size_t size() const { return locations_; }
    bool empty() const { return locations_ == 0; }
    int num_levels() const { return static_cast<int>(levels_.size()); }
    const QNode* root(int level = 0) const { return levels_[static_cast<size_t>(level)].root; }

    uint64_t nodes_visited() const { return nodes_visited_; }
    void reset_counter() { nodes_visited_ = 0; }

    /// Exact squared euclidean distances between a grid point and the
    /// closest / farthest grid point of a cell.
    static u128 min_sq_dist(const Point& q, const QuadCell& c);
    static u128 max_sq_dist(const Point& q, const QuadCell& c);

  private:
    struct Level {
        QNode* root = nullptr;
        std::unordered_map<PointKey, QNode*, PointKeyHash> leaf_by_loc;
        std::unordered_map<CellKey, QNode*, CellKeyHash> node_by_cell;
    };

    PointKey loc_key(const Point& p) const;
    CellKey cell_key(const QuadCell& c) const;

    QNode* descend(const Level& lv, QNode* from, const Point& p) const;
    void insert_into_level(Level& lv, QNode* stop, const Point& p);
    void erase_from_level(Level& lv, const Point& p);
    void destroy(QNode* n);

    uint8_t dims_;
    uint8_t bits_;
    std::mt19937_64 rng_;
    std::vector<Level> levels_;
    size_t locations_ = 0;
    mutable uint64_t nodes_visited_ = 0;
};

}  // namespace retro
