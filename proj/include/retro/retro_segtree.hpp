#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "retro/gusf.hpp"

namespace retro {

/// Internal timestamp: int64 values plus distinct -inf/+inf sentinels.
using Ts = __int128;
inline constexpr Ts kTsNegInf = -(static_cast<Ts>(1) << 100);
inline constexpr Ts kTsPosInf = static_cast<Ts>(1) << 100;
inline constexpr long long kEndInfinity = std::numeric_limits<long long>::max();

namespace segtree_detail {

inline constexpr int kMaxKids = 8;
inline constexpr int kColors = 54;
inline constexpr int kColorStart = 52;  // leaf catalogs: start endpoint here
inline constexpr int kColorEnd = 53;    // leaf catalogs: end endpoint here

// colors over child slots: 28 unordered pairs + same/left-cut/right-cut per slot
inline int pair_color(int a, int b) {
    if (a > b) std::swap(a, b);
    return a * kMaxKids - a * (a + 1) / 2 + (b - a - 1);
}
inline int same_color(int s) { return 28 + s; }
inline int left_color(int s) { return 36 + s; }   // only the start endpoint below
inline int right_color(int s) { return 44 + s; }  // only the end endpoint below

inline int color_of(bool start_under, bool end_under, int start_slot, int end_slot) {
    if (start_under && end_under)
        return start_slot == end_slot ? same_color(start_slot)
                                      : pair_color(start_slot, end_slot);
    if (start_under) return left_color(start_slot);
    return right_color(end_slot);
}

}  // namespace segtree_detail

/// Fully-retroactive ordered dictionary over an opaque key type: lifespans
/// (key alive on [t_start, t_end)) may be inserted and removed at any point
/// of the timeline, and successor / predecessor / range reporting queries may
/// be asked at any time index.
///
/// The time axis is a B-tree over the distinct endpoint timestamps (branching
/// at most 8, preemptive splits). Every node carries a catalog of the
/// lifespans with an endpoint in its subtree, ordered by (key, handle) and
/// colored by which children hold the endpoints; queries walk the search path
/// for t, report the colors that span the path child, and cascade their
/// catalog positions downward instead of re-searching.
template <class Key, class Less = std::less<Key>>
class RetroSegTree {
  public:
    struct Hit {
        uint64_t handle = 0;
        uint64_t user_tag = 0;
        const Key* key = nullptr;
    };

    explicit RetroSegTree(Less less = Less{}) : less_(std::move(less)) {
        root_ = new Node;
        root_->leaf = false;
        attach_leaf(root_, make_leaf(kTsNegInf, true), 0);
        attach_leaf(root_, make_leaf(kTsPosInf, true), 1);
        refresh_node(root_);
    }
    ~RetroSegTree() { destroy(root_); }
    RetroSegTree(const RetroSegTree&) = delete;
    RetroSegTree& operator=(const RetroSegTree&) = delete;
    RetroSegTree(RetroSegTree&&) = delete;
    RetroSegTree& operator=(RetroSegTree&&) = delete;

    /// end == kEndInfinity keeps the key alive forever after t_start.
    uint64_t insert(const Key& key, long long t_start, long long t_end, uint64_t user_tag = 0) {
        if (t_start >= t_end) throw std::invalid_argument("retro: empty lifespan");
        const Ts ts0 = static_cast<Ts>(t_start);
        const Ts ts1 = t_end == kEndInfinity ? kTsPosInf : static_cast<Ts>(t_end);
        const uint64_t handle = next_handle_++;

        Node* ls = get_or_create_leaf(ts0);
        Node* le = get_or_create_leaf(ts1);
        ++ls->endpoint_count;
        ++le->endpoint_count;
        bump_weight(ls, +1);
        bump_weight(le, +1);

        auto [it, ok] = lifespans_.emplace(
            handle, Lifespan{key, ts0, ts1, user_tag, ls, le, {}});
        (void)ok;
        auto [iit, iok] = index_.insert(Item{key, handle});
        (void)iok;
        auto nx = std::next(iit);
        Element* pos = nx == index_.end() ? nullptr : element_in(root_, nx->handle);
        insert_on_paths(it->second, handle, root_, pos, true, true);
        return handle;
    }

    void erase(uint64_t handle) {
        auto it = lifespans_.find(handle);
        if (it == lifespans_.end()) throw std::invalid_argument("retro: unknown handle");
        Lifespan ls = std::move(it->second);
        for (auto& [node, elem] : ls.elems) {
            ++nodes_visited_;
            const ColorSet cm = GusfCatalog::colors(elem);
            node->catalog->unmark(elem, __builtin_ctzll(cm));
            node->catalog->remove(elem);
        }
        index_.erase(Item{ls.key, handle});
        lifespans_.erase(it);

        drop_endpoint(ls.leaf_start);
        drop_endpoint(ls.leaf_end);
    }

    /// Every lifespan alive at time t with key in [y, z] (inclusive).
    std::vector<Hit> report_range(long long t, const Key& y, const Key& z) const {
        std::vector<Hit> out;
        auto ylo = index_.lower_bound(Item{y, 0});
        auto zhi = index_.upper_bound(Item{z, ~uint64_t{0}});
        if (ylo == zhi) return out;
        auto zlast = std::prev(zhi);
        if (index_.key_comp()(*zlast, *ylo)) return out;  // crossed: empty key range

        const Node* v = root_;
        Element* py = element_in(root_, ylo->handle);
        Element* pz = element_in(root_, zlast->handle);
        const Ts ts = static_cast<Ts>(t);
        while (true) {
            ++nodes_visited_;
            GusfCatalog& cat = *v->catalog;
            if (v->leaf) {
                for (Element* e : cat.report(py, pz, color_bit(segtree_detail::kColorStart)))
                    out.push_back(hit_of(GusfCatalog::tag(e)));
                break;
            }
            const Child u = child_for(v, ts);
            for (Element* e : cat.report(py, pz, v->qmask[u.slot]))
                out.push_back(hit_of(GusfCatalog::tag(e)));
            Element* ny = cat.find_next(py, v->fmask[u.slot]);
            if (!ny) break;
            Element* nz = cat.find_prev(pz, v->fmask[u.slot]);
            if (!nz || cat.precedes(nz, ny)) break;
            py = element_in(u.node, GusfCatalog::tag(ny));
            pz = element_in(u.node, GusfCatalog::tag(nz));
            v = u.node;
        }
        return out;
    }

    /// Minimum-key lifespan alive at t with key >= y (ties by handle).
    std::optional<Hit> succ(long long t, const Key& y) const {
        auto it = index_.lower_bound(Item{y, 0});
        if (it == index_.end()) return std::nullopt;
        const Ts ts = static_cast<Ts>(t);
        const Node* v = root_;
        Element* pos = element_in(root_, it->handle);
        std::optional<uint64_t> best;
        auto offer = [&](Element* e) {
            if (!e) return;
            const uint64_t h = GusfCatalog::tag(e);
            if (!best || item_less(h, *best)) best = h;
        };
        while (true) {
            ++nodes_visited_;
            GusfCatalog& cat = *v->catalog;
            if (v->leaf) {
                offer(cat.find_next(pos, color_bit(segtree_detail::kColorStart)));
                break;
            }
            const Child u = child_for(v, ts);
            offer(cat.find_next(pos, v->qmask[u.slot]));
            Element* nxt = cat.find_next(pos, v->fmask[u.slot]);
            if (!nxt) break;
            pos = element_in(u.node, GusfCatalog::tag(nxt));
            v = u.node;
        }
        if (!best) return std::nullopt;
        return hit_of(*best);
    }

    /// Maximum-key lifespan alive at t with key <= y.
    std::optional<Hit> pred(long long t, const Key& y) const {
        auto it = index_.upper_bound(Item{y, ~uint64_t{0}});
        if (it == index_.begin()) return std::nullopt;
        --it;
        const Ts ts = static_cast<Ts>(t);
        const Node* v = root_;
        Element* pos = element_in(root_, it->handle);
        std::optional<uint64_t> best;
        auto offer = [&](Element* e) {
            if (!e) return;
            const uint64_t h = GusfCatalog::tag(e);
            if (!best || item_less(*best, h)) best = h;
        };
        while (true) {
            ++nodes_visited_;
            GusfCatalog& cat = *v->catalog;
            if (v->leaf) {
                offer(cat.find_prev(pos, color_bit(segtree_detail::kColorStart)));
                break;
            }
            const Child u = child_for(v, ts);
            offer(cat.find_prev(pos, v->qmask[u.slot]));
            Element* nxt = cat.find_prev(pos, v->fmask[u.slot]);
            if (!nxt) break;
            pos = element_in(u.node, GusfCatalog::tag(nxt));
            v = u.node;
        }
        if (!best) return std::nullopt;
        return hit_of(*best);
    }

    /// All lifespans alive at t, any key.
    std::vector<Hit> report_all(long long t) const {
        if (index_.empty()) return {};
        return report_range(t, index_.begin()->key, std::prev(index_.end())->key);
    }

    size_t size() const { return lifespans_.size(); }
    bool empty() const { return lifespans_.empty(); }

    uint64_t nodes_visited() const { return nodes_visited_; }
    void reset_counter() { nodes_visited_ = 0; }

    /// Total live catalog entries over all tree nodes (space accounting).
    size_t catalog_entries() const {
        size_t n = 0;
        walk(root_, [&](const Node* v) { n += v->catalog->live_size(); });
        return n;
    }

    /// Test hook: full structural, color, table and nesting audit.
    void audit() const;

  private:
    using Element = GusfCatalog::Element;

    struct Node;
    struct Child {
        Node* node = nullptr;
        uint8_t slot = 0;
    };

    struct Node {
        Node* parent = nullptr;
        bool leaf = true;
        // leaf
        Ts ts = 0;
        uint32_t endpoint_count = 0;
        bool permanent = false;
        // internal
        std::vector<Child> kids;
        uint8_t used_slots = 0;
        std::array<ColorSet, segtree_detail::kMaxKids> qmask{};
        std::array<ColorSet, segtree_detail::kMaxKids> fmask{};
        // both
        Ts min_ts = 0;
        uint64_t weight = 0;
        std::unique_ptr<GusfCatalog> catalog =
            std::make_unique<GusfCatalog>(segtree_detail::kColors);
    };

    struct Lifespan {
        Key key;
        Ts start, end;
        uint64_t user_tag;
        Node* leaf_start;
        Node* leaf_end;
        std::vector<std::pair<Node*, Element*>> elems;
    };

    struct Item {
        Key key;
        uint64_t handle;
    };
    struct ItemLess {
        const RetroSegTree* t;
        bool operator()(const Item& a, const Item& b) const {
            if (t->less_(a.key, b.key)) return true;
            if (t->less_(b.key, a.key)) return false;
            return a.handle < b.handle;
        }
    };

    Less less_;
    Node* root_ = nullptr;
    std::unordered_map<uint64_t, Lifespan> lifespans_;
    std::set<Item, ItemLess> index_{ItemLess{this}};
    uint64_t next_handle_ = 1;
    mutable uint64_t nodes_visited_ = 0;

    // --- small helpers -----------------------------------------------------

    bool item_less(uint64_t ha, uint64_t hb) const {
        const Lifespan& a = lifespans_.at(ha);
        const Lifespan& b = lifespans_.at(hb);
        if (less_(a.key, b.key)) return true;
        if (less_(b.key, a.key)) return false;
        return ha < hb;
    }

    Hit hit_of(uint64_t handle) const {
        const Lifespan& ls = lifespans_.at(handle);
        return Hit{handle, ls.user_tag, &ls.key};
    }

    Element* element_in(const Node* v, uint64_t handle) const {
        const Lifespan& ls = lifespans_.at(handle);
        for (const auto& [node, elem] : ls.elems)
            if (node == v) return elem;
        throw std::logic_error("retro: catalog entry missing");
    }

    static Node* make_leaf(Ts ts, bool permanent) {
        Node* l = new Node;
        l->leaf = true;
        l->ts = ts;
        l->min_ts = ts;
        l->permanent = permanent;
        return l;
    }

    static void attach_leaf(Node* v, Node* l, size_t pos) {
        l->parent = v;
        const int slot = __builtin_ctz(~static_cast<unsigned>(v->used_slots));
        v->used_slots |= static_cast<uint8_t>(1u << slot);
        v->kids.insert(v->kids.begin() + static_cast<ptrdiff_t>(pos),
                       Child{l, static_cast<uint8_t>(slot)});
    }

    void destroy(Node* v) {
        if (!v->leaf)
            for (auto& k : v->kids) destroy(k.node);
        delete v;
    }

    template <class Fn>
    void walk(const Node* v, Fn&& fn) const {
        fn(v);
        if (!v->leaf)
            for (const auto& k : v->kids) walk(k.node, fn);
    }

    static Child child_for(const Node* v, Ts t) {
        size_t i = v->kids.size() - 1;
        while (i > 0 && v->kids[i].node->min_ts > t) --i;
        return v->kids[i];
    }

    void bump_weight(Node* leaf, int64_t d) {
        for (Node* v = leaf; v; v = v->parent)
            v->weight = static_cast<uint64_t>(static_cast<int64_t>(v->weight) + d);
    }

    /// min_ts and Q/F masks from the current child list.
    void refresh_node(Node* v) {
        v->min_ts = v->kids.front().node->min_ts;
        for (auto& m : v->qmask) m = 0;
        for (auto& m : v->fmask) m = 0;
        const size_t m = v->kids.size();
        for (size_t i = 0; i < m; ++i) {
            const int si = v->kids[i].slot;
            ColorSet q = 0;
            ColorSet f = color_bit(segtree_detail::left_color(si)) |
                         color_bit(segtree_detail::right_color(si)) |
                         color_bit(segtree_detail::same_color(si));
            for (size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                f |= color_bit(segtree_detail::pair_color(si, v->kids[j].slot));
            }
            for (size_t l = 0; l < i; ++l) {
                q |= color_bit(segtree_detail::left_color(v->kids[l].slot));
                for (size_t r = i + 1; r < m; ++r)
                    q |= color_bit(segtree_detail::pair_color(v->kids[l].slot, v->kids[r].slot));
            }
            for (size_t r = i + 1; r < m; ++r)
                q |= color_bit(segtree_detail::right_color(v->kids[r].slot));
            v->qmask[si] = q;
            v->fmask[si] = f;
        }
    }

    void refresh_min_up(Node* v) {
        for (; v; v = v->parent)
            v->min_ts = v->leaf ? v->ts : v->kids.front().node->min_ts;
    }

    // --- catalog rebuilding ------------------------------------------------

    /// Which endpoints of the lifespan sit below this catalog's node,
    /// decoded from the element's color.
    static std::pair<bool, bool> endpoints_of_color(int color) {
        using namespace segtree_detail;
        if (color == kColorStart) return {true, false};
        if (color == kColorEnd) return {false, true};
        if (color >= right_color(0)) return {false, true};
        if (color >= left_color(0)) return {true, false};
        return {true, true};  // pair or same colors
    }

    void drop_catalog(Node* v) {
        ++nodes_visited_;
        v->catalog->for_each_live([&](Element* e) {
            const uint64_t h = GusfCatalog::tag(e);
            auto& elems = lifespans_.at(h).elems;
            for (size_t i = 0; i < elems.size(); ++i) {
                if (elems[i].first == v) {
                    elems[i] = elems.back();
                    elems.pop_back();
                    break;
                }
            }
        });
        v->catalog.reset();
    }

    /// Rebuilds M(v) from the children's catalogs (v internal).
    void rebuild_catalog(Node* v) {
        if (v->catalog) drop_catalog(v);
        v->catalog = std::make_unique<GusfCatalog>(segtree_detail::kColors);

        struct Entry {
            uint64_t handle;
            int start_slot = -1;
            int end_slot = -1;
        };
        std::vector<std::vector<Entry>> streams(v->kids.size());
        for (size_t i = 0; i < v->kids.size(); ++i) {
            const Child& k = v->kids[i];
            auto& s = streams[i];
            k.node->catalog->for_each_live([&](Element* e) {
                const auto [su, eu] =
                    endpoints_of_color(__builtin_ctzll(GusfCatalog::colors(e)));
                s.push_back(Entry{GusfCatalog::tag(e), su ? k.slot : -1, eu ? k.slot : -1});
            });
        }
        std::vector<size_t> at(v->kids.size(), 0);
        for (;;) {
            int pick = -1;
            for (size_t i = 0; i < streams.size(); ++i) {
                if (at[i] >= streams[i].size()) continue;
                if (pick < 0 ||
                    item_less(streams[i][at[i]].handle,
                              streams[static_cast<size_t>(pick)][at[static_cast<size_t>(pick)]]
                                  .handle))
                    pick = static_cast<int>(i);
            }
            if (pick < 0) break;
            Entry e = streams[static_cast<size_t>(pick)][at[static_cast<size_t>(pick)]++];
            // the same lifespan can continue in one more stream when its
            // endpoints split across two children
            for (size_t i = 0; i < streams.size(); ++i) {
                if (at[i] < streams[i].size() && streams[i][at[i]].handle == e.handle) {
                    const Entry& o = streams[i][at[i]++];
                    if (o.start_slot >= 0) e.start_slot = o.start_slot;
                    if (o.end_slot >= 0) e.end_slot = o.end_slot;
                }
            }
            const int color = segtree_detail::color_of(e.start_slot >= 0, e.end_slot >= 0,
                                                       e.start_slot, e.end_slot);
            Element* elem = v->catalog->push_back(e.handle);
            v->catalog->mark(elem, color);
            lifespans_.at(e.handle).elems.emplace_back(v, elem);
            ++nodes_visited_;
        }
    }

    // --- structure: leaf creation with preemptive splits ---------------------

    Node* split_node(Node* v, Ts toward) {
        // partition the children into two weight-balanced runs
        const size_t m = v->kids.size();
        uint64_t total = 0;
        for (auto& k : v->kids) total += k.node->weight;
        size_t cut = 2;
        uint64_t acc = v->kids[0].node->weight + v->kids[1].node->weight;
        uint64_t best_diff = ~uint64_t{0};
        size_t best_cut = 2;
        for (size_t i = 2; i + 2 <= m; ++i) {
            const uint64_t diff = acc > total - acc ? acc - (total - acc) : total - acc - acc;
            if (diff < best_diff) {
                best_diff = diff;
                best_cut = i;
            }
            acc += v->kids[i].node->weight;
        }
        cut = best_cut;

        Node* v2 = new Node;
        v2->leaf = false;
        for (size_t i = cut; i < m; ++i) {
            const int slot = __builtin_ctz(~static_cast<unsigned>(v2->used_slots));
            v2->used_slots |= static_cast<uint8_t>(1u << slot);
            v->kids[i].node->parent = v2;
            v2->kids.push_back(Child{v->kids[i].node, static_cast<uint8_t>(slot)});
            v->used_slots &= static_cast<uint8_t>(~(1u << v->kids[i].slot));
        }
        v->kids.resize(cut);
        uint64_t w2 = 0;
        for (auto& k : v2->kids) w2 += k.node->weight;
        v2->weight = w2;
        v->weight -= w2;
        refresh_node(v);
        refresh_node(v2);

        Node* p = v->parent;
        if (!p) {
            p = new Node;
            p->leaf = false;
            p->weight = v->weight + v2->weight;
            v->parent = p;
            v2->parent = p;
            const int s1 = 0, s2 = 1;
            p->used_slots = 3;
            p->kids.push_back(Child{v, static_cast<uint8_t>(s1)});
            p->kids.push_back(Child{v2, static_cast<uint8_t>(s2)});
            root_ = p;
        } else {
            v2->parent = p;
            const int slot = __builtin_ctz(~static_cast<unsigned>(p->used_slots));
            p->used_slots |= static_cast<uint8_t>(1u << slot);
            size_t pos = 0;
            while (p->kids[pos].node != v) ++pos;
            p->kids.insert(p->kids.begin() + static_cast<ptrdiff_t>(pos + 1),
                           Child{v2, static_cast<uint8_t>(slot)});
        }
        refresh_node(p);

        rebuild_catalog(v);
        rebuild_catalog(v2);
        rebuild_catalog(p);
        return toward >= v2->min_ts ? v2 : v;
    }

    Node* get_or_create_leaf(Ts ts) {
        Node* v = root_;
        for (;;) {
            if (v->kids.size() >= segtree_detail::kMaxKids) v = split_node(v, ts);
            const Child u = child_for(v, ts);
            if (!u.node->leaf) {
                v = u.node;
                continue;
            }
            if (u.node->ts == ts) return u.node;
            // new leaf goes right after u (or before it for ts below the min)
            Node* l = make_leaf(ts, false);
            size_t pos = 0;
            while (v->kids[pos].node != u.node) ++pos;
            if (ts > u.node->ts) ++pos;
            attach_leaf(v, l, pos);
            refresh_node(v);
            refresh_min_up(v);
            return l;
        }
    }

    // --- structure: removal and underflow -------------------------------------

    void drop_endpoint(Node* leaf) {
        --leaf->endpoint_count;
        bump_weight(leaf, -1);
        if (leaf->endpoint_count > 0 || leaf->permanent) return;
        Node* p = leaf->parent;
        size_t pos = 0;
        while (p->kids[pos].node != leaf) ++pos;
        p->used_slots &= static_cast<uint8_t>(~(1u << p->kids[pos].slot));
        p->kids.erase(p->kids.begin() + static_cast<ptrdiff_t>(pos));
        drop_catalog(leaf);
        delete leaf;
        refresh_node(p);
        refresh_min_up(p);
        fix_underflow(p);
    }

    void fix_underflow(Node* v) {
        while (v) {
            if (v == root_) {
                if (!v->leaf && v->kids.size() == 1) {
                    Node* only = v->kids[0].node;
                    only->parent = nullptr;
                    drop_catalog(v);
                    v->kids.clear();
                    delete v;
                    root_ = only;
                }
                return;
            }
            if (v->kids.size() >= 2) return;
            // merge v's children into an adjacent sibling
            Node* p = v->parent;
            size_t pos = 0;
            while (p->kids[pos].node != v) ++pos;
            const size_t spos = pos > 0 ? pos - 1 : pos + 1;
            Node* s = p->kids[spos].node;

            std::vector<Node*> pool;
            auto grab = [&](Node* n) {
                for (auto& k : n->kids) pool.push_back(k.node);
                n->kids.clear();
                n->used_slots = 0;
            };
            if (spos < pos) {
                grab(s);
                grab(v);
            } else {
                grab(v);
                grab(s);
            }
            // remove v from p, keep s as the merge target
            p->used_slots &= static_cast<uint8_t>(~(1u << p->kids[pos].slot));
            p->kids.erase(p->kids.begin() + static_cast<ptrdiff_t>(pos));
            drop_catalog(v);
            delete v;

            for (Node* n : pool) {
                const int slot = __builtin_ctz(~static_cast<unsigned>(s->used_slots));
                s->used_slots |= static_cast<uint8_t>(1u << slot);
                n->parent = s;
                s->kids.push_back(Child{n, static_cast<uint8_t>(slot)});
            }
            uint64_t w = 0;
            for (auto& k : s->kids) w += k.node->weight;
            s->weight = w;
            refresh_node(s);
            rebuild_catalog(s);
            if (s->kids.size() > segtree_detail::kMaxKids) {
                split_node(s, s->min_ts);  // also rebuilds p's catalog
            } else {
                refresh_node(p);
                rebuild_catalog(p);
            }
            refresh_min_up(p);
            v = p;
        }
    }

    // --- catalog insertion along the endpoint paths ----------------------------

    /// Inserts the lifespan into M(v) and recurses into the children that
    /// contain its endpoints. pos is the element of M(v) before which the
    /// new element belongs (nullptr = append).
    void insert_on_paths(Lifespan& ls, uint64_t handle, Node* v, Element* pos, bool start_under,
                         bool end_under) {
        ++nodes_visited_;
        int color;
        int start_slot = -1, end_slot = -1;
        Child cs{}, ce{};
        if (v->leaf) {
            color = start_under ? segtree_detail::kColorStart : segtree_detail::kColorEnd;
        } else {
            if (start_under) {
                cs = child_for(v, ls.start);
                start_slot = cs.slot;
            }
            if (end_under) {
                ce = child_for(v, ls.end);
                end_slot = ce.slot;
            }
            color = segtree_detail::color_of(start_under, end_under, start_slot, end_slot);
        }
        Element* elem = v->catalog->insert_before(pos, handle);
        v->catalog->mark(elem, color);
        ls.elems.emplace_back(v, elem);
        if (v->leaf) return;

        auto cascade = [&](const Child& u) -> Element* {
            if (!pos) return nullptr;
            Element* e = v->catalog->find_next(pos, v->fmask[u.slot]);
            if (!e) return nullptr;
            return element_in(u.node, GusfCatalog::tag(e));
        };
        if (start_under && end_under && cs.node == ce.node) {
            insert_on_paths(ls, handle, cs.node, cascade(cs), true, true);
            return;
        }
        if (start_under) insert_on_paths(ls, handle, cs.node, cascade(cs), true, false);
        if (end_under) insert_on_paths(ls, handle, ce.node, cascade(ce), false, true);
    }
};

// --- audit -----------------------------------------------------------------

template <class Key, class Less>
void RetroSegTree<Key, Less>::audit() const {
    // structural sweep: leaf order, weights, masks, kid counts
    Ts prev_ts = kTsNegInf - 1;
    std::function<void(const Node*)> leafsweep = [&](const Node* v) {
        if (v->leaf) {
            if (v->ts <= prev_ts) throw std::logic_error("audit: leaf order");
            prev_ts = v->ts;
            if (v->min_ts != v->ts) throw std::logic_error("audit: leaf min_ts");
            return;
        }
        if (v->kids.size() < 2 || v->kids.size() > segtree_detail::kMaxKids)
            throw std::logic_error("audit: kid count");
        uint64_t w = 0;
        uint64_t slots = 0;
        for (const auto& k : v->kids) {
            if (k.node->parent != v) throw std::logic_error("audit: parent link");
            if (slots & (1u << k.slot)) throw std::logic_error("audit: slot reuse");
            slots |= 1u << k.slot;
            w += k.node->weight;
        }
        if (slots != v->used_slots) throw std::logic_error("audit: used_slots");
        if (w != v->weight) throw std::logic_error("audit: weight");
        if (v->min_ts != v->kids.front().node->min_ts) throw std::logic_error("audit: min_ts");
        // Q/F identities
        const size_t m = v->kids.size();
        for (size_t i = 0; i < m; ++i) {
            ColorSet q = 0, f = 0;
            const int si = v->kids[i].slot;
            f |= color_bit(segtree_detail::left_color(si)) |
                 color_bit(segtree_detail::right_color(si)) |
                 color_bit(segtree_detail::same_color(si));
            for (size_t j = 0; j < m; ++j)
                if (j != i) f |= color_bit(segtree_detail::pair_color(si, v->kids[j].slot));
            for (size_t l = 0; l < i; ++l) {
                q |= color_bit(segtree_detail::left_color(v->kids[l].slot));
                for (size_t r = i + 1; r < m; ++r)
                    q |= color_bit(segtree_detail::pair_color(v->kids[l].slot, v->kids[r].slot));
            }
            for (size_t r = i + 1; r < m; ++r)
                q |= color_bit(segtree_detail::right_color(v->kids[r].slot));
            if (q != v->qmask[si]) throw std::logic_error("audit: Q table");
            if (f != v->fmask[si]) throw std::logic_error("audit: F table");
        }
        for (const auto& k : v->kids) leafsweep(k.node);
    };
    leafsweep(root_);

    // per-lifespan membership and colors
    for (const auto& [handle, ls] : lifespans_) {
        std::set<const Node*> expected;
        for (Node* v = ls.leaf_start; v; v = v->parent) expected.insert(v);
        for (Node* v = ls.leaf_end; v; v = v->parent) expected.insert(v);
        if (expected.size() != ls.elems.size())
            throw std::logic_error("audit: catalog membership count");
        for (const auto& [node, elem] : ls.elems) {
            if (!expected.count(node)) throw std::logic_error("audit: stray catalog entry");
            if (GusfCatalog::tag(elem) != handle) throw std::logic_error("audit: tag");
            const ColorSet cm = GusfCatalog::colors(elem);
            if (__builtin_popcountll(cm) != 1) throw std::logic_error("audit: color count");
            const int color = __builtin_ctzll(cm);
            int want;
            if (node->leaf) {
                want = node == ls.leaf_start ? segtree_detail::kColorStart
                                             : segtree_detail::kColorEnd;
            } else {
                int ss = -1, es = -1;
                for (const auto& k : node->kids) {
                    for (Node* w = ls.leaf_start; w; w = w->parent)
                        if (w == k.node) ss = k.slot;
                    for (Node* w = ls.leaf_end; w; w = w->parent)
                        if (w == k.node) es = k.slot;
                }
                want = segtree_detail::color_of(ss >= 0, es >= 0, ss, es);
            }
            if (color != want) throw std::logic_error("audit: wrong color");
        }
    }

    // nesting: M(child) elements appear in M(parent) with the child's F color
    walk(root_, [&](const Node* v) {
        if (v->leaf) return;
        for (const auto& k : v->kids) {
            k.node->catalog->for_each_live([&](Element* e) {
                const uint64_t h = GusfCatalog::tag(e);
                Element* up = element_in(v, h);
                if (!(GusfCatalog::colors(up) & v->fmask[k.slot]))
                    throw std::logic_error("audit: nesting color");
            });
        }
    });
}

}  // namespace retro
