#include "retro/quadtree.hpp"

#include <algorithm>
#include <stdexcept>

namespace retro {

SkipQuadtree::~SkipQuadtree() {
    for (Level& lv : levels_) destroy(lv.root);
}

void SkipQuadtree::destroy(QNode* n) {
    if (!n) return;
    for (auto& [q, c] : n->kids) destroy(c);
    delete n;
}

PointKey SkipQuadtree::loc_key(const Point& p) const {
    PointKey k;
    k.coords = p.coords;
    return k;
}

CellKey SkipQuadtree::cell_key(const QuadCell& c) const {
    CellKey k;
    k.level = c.level;
    const int sh = bits_ - c.level;
    for (int i = 0; i < dims_; ++i)
        k.prefix[static_cast<size_t>(i)] = c.anchor.coords[static_cast<size_t>(i)] >> sh;
    return k;
}

QNode* SkipQuadtree::descend(const Level& lv, QNode* from, const Point& p) const {
    QNode* cur = from ? from : lv.root;
    if (!cur || !cur->cell.contains(p)) return nullptr;
    for (;;) {
        ++nodes_visited_;
        if (cur->is_leaf) return cur;
        QNode* next = cur->child_at(cur->cell.child_index(p));
        if (!next || !next->cell.contains(p)) return cur;
        if (next->is_leaf && next->point != p) return cur;
        cur = next;
    }
}

const QNode* SkipQuadtree::locate(const Point& p) const {
    QNode* stop = nullptr;
    for (int lev = static_cast<int>(levels_.size()) - 1; lev >= 0; --lev) {
        const Level& lv = levels_[static_cast<size_t>(lev)];
        QNode* from = nullptr;
        if (stop) {
            // the same cell exists one level down; leaves hop by location
            if (stop->is_leaf) {
                auto it = lv.leaf_by_loc.find(loc_key(stop->point));
                from = it != lv.leaf_by_loc.end() ? it->second : nullptr;
            } else {
                auto it = lv.node_by_cell.find(cell_key(stop->cell));
                from = it != lv.node_by_cell.end() ? it->second : nullptr;
            }
        }
        stop = descend(lv, from, p);
    }
    return stop;
}

void SkipQuadtree::insert_into_level(Level& lv, QNode* stop, const Point& p) {
    QNode* leaf = new QNode;
    leaf->is_leaf = true;
    leaf->point = p;
    leaf->cell = point_cell(p);
    lv.leaf_by_loc.emplace(loc_key(p), leaf);

    if (!lv.root) {
        lv.root = leaf;
        return;
    }

    QNode* sibling = nullptr;  // subtree the new leaf gets paired with
    QNode* parent = nullptr;
    if (!stop) {
        sibling = lv.root;  // p outside the root cell
    } else if (stop->is_leaf) {
        sibling = stop;  // only possible when the root itself is a leaf
        parent = stop->parent;
    } else {
        const int q = stop->cell.child_index(p);
        QNode* existing = stop->child_at(q);
        if (!existing) {
            leaf->parent = stop;
            stop->kids.emplace_back(q, leaf);
            std::sort(stop->kids.begin(), stop->kids.end());
            return;
        }
        sibling = existing;  // compressed gap: split the edge
        parent = stop;
    }

    // smallest cell containing both p and the sibling subtree
    const QuadCell join = common_cell(p, sibling->cell.anchor);
    QNode* mid = new QNode;
    mid->cell = join;
    mid->parent = parent;
    lv.node_by_cell.emplace(cell_key(join), mid);

    const int qs = join.child_index(sibling->cell.anchor);
    const int qp = join.child_index(p);
    sibling->parent = mid;
    leaf->parent = mid;
    mid->kids.emplace_back(qs, sibling);
    mid->kids.emplace_back(qp, leaf);
    std::sort(mid->kids.begin(), mid->kids.end());

    if (!parent) {
        lv.root = mid;
    } else {
        for (auto& [q, c] : parent->kids)
            if (c == sibling) c = mid;
    }
}

void SkipQuadtree::insert(const Point& p, uint64_t handle) {
    const PointKey lk = loc_key(p);
    auto it0 = levels_[0].leaf_by_loc.find(lk);
    if (it0 != levels_[0].leaf_by_loc.end()) {
        it0->second->handles.push_back(handle);
        return;
    }
    ++locations_;

    // promotion height; the level count may grow by at most one per insert
    int height = 0;
    while ((rng_() & 1u) && height < static_cast<int>(levels_.size())) ++height;
    if (height >= static_cast<int>(levels_.size())) levels_.emplace_back();

    // collect per-level stop nodes top-down, then splice the point in
    std::vector<QNode*> stops(levels_.size(), nullptr);
    QNode* stop = nullptr;
    for (int lev = static_cast<int>(levels_.size()) - 1; lev >= 0; --lev) {
        const Level& lv = levels_[static_cast<size_t>(lev)];
        QNode* from = nullptr;
        if (stop) {
            if (stop->is_leaf) {
                auto it = lv.leaf_by_loc.find(loc_key(stop->point));
                from = it != lv.leaf_by_loc.end() ? it->second : nullptr;
            } else {
                auto it = lv.node_by_cell.find(cell_key(stop->cell));
                from = it != lv.node_by_cell.end() ? it->second : nullptr;
            }
        }
        stop = descend(lv, from, p);
        stops[static_cast<size_t>(lev)] = stop;
    }
    for (int lev = 0; lev <= height; ++lev)
        insert_into_level(levels_[static_cast<size_t>(lev)], stops[static_cast<size_t>(lev)], p);

    levels_[0].leaf_by_loc.at(lk)->handles.push_back(handle);
}

void SkipQuadtree::erase_from_level(Level& lv, const Point& p) {
    auto it = lv.leaf_by_loc.find(loc_key(p));
    QNode* leaf = it->second;
    lv.leaf_by_loc.erase(it);

    QNode* parent = leaf->parent;
    if (!parent) {
        lv.root = nullptr;
        delete leaf;
        return;
    }
    parent->kids.erase(
        std::find_if(parent->kids.begin(), parent->kids.end(),
                     [&](const std::pair<int, QNode*>& kv) { return kv.second == leaf; }));
    delete leaf;
    if (parent->kids.size() >= 2) return;

    // splice single-child chains back into one edge
    QNode* only = parent->kids.front().second;
    only->parent = parent->parent;
    if (parent->parent) {
        for (auto& [q, c] : parent->parent->kids)
            if (c == parent) c = only;
    } else {
        lv.root = only;
    }
    lv.node_by_cell.erase(cell_key(parent->cell));
    delete parent;
}

void SkipQuadtree::erase(const Point& p, uint64_t handle) {
    auto it0 = levels_[0].leaf_by_loc.find(loc_key(p));
    if (it0 == levels_[0].leaf_by_loc.end())
        throw std::invalid_argument("quadtree erase: unknown location");
    std::vector<uint64_t>& hs = it0->second->handles;
    auto hit = std::find(hs.begin(), hs.end(), handle);
    if (hit == hs.end()) throw std::invalid_argument("quadtree erase: unknown handle");
    hs.erase(hit);
    if (!hs.empty()) return;

    --locations_;
    for (Level& lv : levels_)
        if (lv.leaf_by_loc.count(loc_key(p))) erase_from_level(lv, p);
    while (levels_.size() > 1 && levels_.back().root == nullptr) levels_.pop_back();
}

u128 SkipQuadtree::min_sq_dist(const Point& q, const QuadCell& c) {
    u128 s = 0;
    const uint32_t side = c.side();
    for (int i = 0; i < q.dims; ++i) {
        const int64_t g = q.coords[static_cast<size_t>(i)];
        const int64_t a = c.anchor.coords[static_cast<size_t>(i)];
        const int64_t b = a + side - 1;
        const int64_t d = g < a ? a - g : (g > b ? g - b : 0);
        s += static_cast<u128>(d) * static_cast<u128>(d);
    }
    return s;
}

u128 SkipQuadtree::max_sq_dist(const Point& q, const QuadCell& c) {
    u128 s = 0;
    const uint32_t side = c.side();
    for (int i = 0; i < q.dims; ++i) {
        const int64_t g = q.coords[static_cast<size_t>(i)];
        const int64_t a = c.anchor.coords[static_cast<size_t>(i)];
        const int64_t b = a + side - 1;
        const int64_t d = std::max(g < a ? a - g : g - a, g < b ? b - g : g - b);
        s += static_cast<u128>(d) * static_cast<u128>(d);
    }
    return s;
}

std::vector<SkipQuadtree::InnerCell> SkipQuadtree::inner_cells(const Point& q, const Frac& r2,
                                                               const Frac& eps2) const {
    std::vector<InnerCell> out;
    if (!levels_[0].root) return out;

    // Classification per cell, all comparisons exact:
    //   outside the r-ball           -> drop the subtree
    //   inside the r-ball, or a leaf -> accept
    //   diameter <= eps*r/2          -> accept (maxDist <= r + eps*r/2)
    //   otherwise                    -> refine into the children
    const Frac accept2 = eps2.mul(r2, false);  // (eps * r)^2

    std::vector<const QNode*> stack{levels_[0].root};
    while (!stack.empty()) {
        const QNode* n = stack.back();
        stack.pop_back();
        ++nodes_visited_;
        const u128 mind2 = min_sq_dist(q, n->cell);
        if (r2.lt_int(mind2)) continue;
        if (n->is_leaf || r2.ge_int(max_sq_dist(q, n->cell))) {
            out.push_back({n->cell, n});
            continue;
        }
        const uint32_t side = n->cell.side();
        const u128 diam2 = static_cast<u128>(q.dims) * static_cast<u128>(side) * side;
        if (accept2.ge_int(4 * diam2)) {
            out.push_back({n->cell, n});
            continue;
        }
        for (const auto& [idx, c] : n->kids) stack.push_back(c);
    }
    return out;
}

std::pair<Point, Point> SkipQuadtree::cell_extremes(const QNode* node) const {
    if (!node) throw std::invalid_argument("cell_extremes: empty cell");
    const QNode* lo = node;
    while (!lo->is_leaf) {
        ++nodes_visited_;
        lo = lo->kids.front().second;
    }
    const QNode* hi = node;
    while (!hi->is_leaf) {
        ++nodes_visited_;
        hi = hi->kids.back().second;
    }
    return {lo->point, hi->point};
}

std::pair<Point, Point> SkipQuadtree::cell_extremes(const QuadCell& cell) const {
    const Level& lv = levels_[0];
    if (cell.level == bits_) {
        auto it = lv.leaf_by_loc.find(loc_key(cell.anchor));
        if (it == lv.leaf_by_loc.end()) throw std::invalid_argument("cell_extremes: empty cell");
        return {it->second->point, it->second->point};
    }
    auto it = lv.node_by_cell.find(cell_key(cell));
    if (it == lv.node_by_cell.end()) throw std::invalid_argument("cell_extremes: empty cell");
    return cell_extremes(it->second);
}

}  // namespace retro
