#include "retro/gusf.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace retro {

namespace gusf_detail {

struct Block;

struct BNode {
    BNode* parent = nullptr;
    BNode* left = nullptr;  // internal iff left != nullptr
    BNode* right = nullptr;
    uint32_t size = 1;  // leaves below (1 for a leaf)
    ColorSet colormask = 0;
    // internal: sparse color -> allleafs index of one colored leaf below
    std::vector<std::pair<uint8_t, uint16_t>> leafs;

    // leaf payload
    Block* block = nullptr;
    uint64_t tag = 0;
    uint16_t allleafs_idx = 0;
    bool tombstone = false;
    struct ColorLink {
        int color = -1;
        BNode* prev = nullptr;
        BNode* next = nullptr;
    };
    ColorLink clinks[GusfCatalog::kColorCap];

    bool is_leaf() const { return left == nullptr; }
    int slot_of(int color) const {
        for (int s = 0; s < GusfCatalog::kColorCap; ++s)
            if (clinks[s].color == color) return s;
        return -1;
    }
    uint16_t leafs_at(int color) const {
        for (const auto& [c, idx] : leafs)
            if (c == color) return idx;
        return 0;
    }
    void leafs_set(int color, uint16_t idx) {
        for (auto& [c, i] : leafs)
            if (c == color) {
                i = idx;
                return;
            }
        leafs.emplace_back(static_cast<uint8_t>(color), idx);
    }
    void leafs_erase(int color) {
        for (size_t i = 0; i < leafs.size(); ++i)
            if (leafs[i].first == color) {
                leafs[i] = leafs.back();
                leafs.pop_back();
                return;
            }
    }
};

struct Block {
    BNode* root = nullptr;
    std::vector<BNode*> allleafs;  // [0] reserved (0 = absent in leafs arrays)
    std::vector<uint16_t> freelist;
    uint64_t label = 0;
    Block* prev = nullptr;
    Block* next = nullptr;
    std::vector<BNode*> heads, tails;  // per-color leaf lists
    uint32_t nleaves = 0;

    explicit Block(int ncolors)
        : allleafs(1, nullptr),
          heads(static_cast<size_t>(ncolors), nullptr),
          tails(static_cast<size_t>(ncolors), nullptr) {}

    uint16_t take_index(BNode* leaf) {
        uint16_t idx;
        if (!freelist.empty()) {
            idx = freelist.back();
            freelist.pop_back();
            allleafs[idx] = leaf;
        } else {
            idx = static_cast<uint16_t>(allleafs.size());
            allleafs.push_back(leaf);
        }
        leaf->allleafs_idx = idx;
        leaf->block = this;
        return idx;
    }
};

namespace {

constexpr uint64_t kLabelSpace = uint64_t{1} << 56;

int depth_limit(uint32_t n) {
    return static_cast<int>(std::log2(std::max<uint32_t>(2, n)) * 1.95) + 2;
}

void collect_leaves(BNode* v, std::vector<BNode*>& out) {
    if (v->is_leaf()) {
        out.push_back(v);
        return;
    }
    collect_leaves(v->left, out);
    collect_leaves(v->right, out);
}

// rebuilds the summaries of an internal node from its children
void refresh(BNode* v) {
    v->size = v->left->size + v->right->size;
    v->colormask = v->left->colormask | v->right->colormask;
    v->leafs.clear();
    for (ColorSet m = v->colormask; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        const BNode* src = (v->left->colormask & color_bit(c)) ? v->left : v->right;
        v->leafs.emplace_back(static_cast<uint8_t>(c),
                              src->is_leaf() ? src->allleafs_idx : src->leafs_at(c));
    }
}

BNode* build_balanced(BNode** leaves, uint32_t n) {
    if (n == 1) {
        leaves[0]->parent = nullptr;
        return leaves[0];
    }
    const uint32_t half = n / 2;
    BNode* v = new BNode;
    v->left = build_balanced(leaves, half);
    v->right = build_balanced(leaves + half, n - half);
    v->left->parent = v;
    v->right->parent = v;
    refresh(v);
    return v;
}

void delete_internal(BNode* v) {
    if (!v || v->is_leaf()) return;
    delete_internal(v->left);
    delete_internal(v->right);
    delete v;
}

BNode* descend_leftmost(BNode* v, ColorSet cq) {
    while (!v->is_leaf()) v = (v->left->colormask & cq) ? v->left : v->right;
    return v;
}

BNode* descend_rightmost(BNode* v, ColorSet cq) {
    while (!v->is_leaf()) v = (v->right->colormask & cq) ? v->right : v->left;
    return v;
}

void collect_colored(BNode* v, ColorSet cq, std::vector<BNode*>& out) {
    if (!(v->colormask & cq)) return;
    if (v->is_leaf()) {
        out.push_back(v);
        return;
    }
    collect_colored(v->left, cq, out);
    collect_colored(v->right, cq, out);
}

}  // namespace

}  // namespace gusf_detail

using gusf_detail::Block;
using gusf_detail::BNode;

GusfCatalog::GusfCatalog(int ncolors) : ncolors_(ncolors) {
    if (ncolors < 1 || ncolors > 64) throw std::invalid_argument("gusf: 1..64 colors");
}

GusfCatalog::~GusfCatalog() {
    for (Block* b = head_; b;) {
        Block* nx = b->next;
        destroy_block(b, true);
        b = nx;
    }
}

void GusfCatalog::destroy_block(Block* b, bool delete_leaves) {
    if (b->root) {
        std::vector<BNode*> stack{b->root};
        while (!stack.empty()) {
            BNode* v = stack.back();
            stack.pop_back();
            if (v->is_leaf()) {
                if (delete_leaves) delete v;
                continue;
            }
            stack.push_back(v->left);
            stack.push_back(v->right);
            delete v;
        }
    }
    delete b;
}

ColorSet GusfCatalog::colors(const Element* x) { return x->colormask; }
uint64_t GusfCatalog::tag(const Element* x) { return x->tag; }
bool GusfCatalog::is_tombstone(const Element* x) { return x->tombstone; }

size_t GusfCatalog::block_count() const {
    size_t n = 0;
    for (Block* b = head_; b; b = b->next) ++n;
    return n;
}

// --- order maintenance over block labels ------------------------------------

void GusfCatalog::relabel_around(Block* at) {
    ++relabels_;
    // grow a window around `at` until the surrounding label gap fits the
    // window with density at most one half
    size_t want = 2;
    for (;;) {
        Block* first = at;
        Block* last = at;
        size_t got = 1;
        while (got < want && (first->prev || last->next)) {
            if (first->prev) {
                first = first->prev;
                ++got;
            }
            if (got < want && last->next) {
                last = last->next;
                ++got;
            }
        }
        const uint64_t lo = first->prev ? first->prev->label : 0;
        const uint64_t hi = last->next ? last->next->label : gusf_detail::kLabelSpace;
        if (hi - lo >= 2 * (got + 1)) {
            const uint64_t step = (hi - lo) / (got + 1);
            for (Block* b = first;; b = b->next) {
                index_erase_block(b);
                by_label_.erase(b->label);
                if (b == last) break;
            }
            uint64_t next_label = lo + step;
            for (Block* b = first;; b = b->next) {
                b->label = next_label;
                by_label_.emplace(b->label, b);
                index_insert_block(b);
                next_label += step;
                ++work_;
                if (b == last) break;
            }
            return;
        }
        if (got < want) {
            // whole list collected and still too dense: cannot happen, the
            // label space dwarfs any reachable block count
            throw std::logic_error("gusf: label space exhausted");
        }
        want *= 2;
    }
}

void GusfCatalog::index_insert_block(Block* b) {
    if (!index_ || !b->root) return;
    for (ColorSet m = b->root->colormask; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        index_->insert(b->label, c);
    }
}

void GusfCatalog::index_erase_block(Block* b) {
    if (!index_ || !b->root) return;
    for (ColorSet m = b->root->colormask; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        index_->erase(b->label, c);
    }
}

GusfCatalog::Block* GusfCatalog::new_block_after(Block* prev) {
    Block* nxt = prev ? prev->next : head_;
    // make room between the neighbors before the new block joins the list
    uint64_t lo = prev ? prev->label : 0;
    uint64_t hi = nxt ? nxt->label : gusf_detail::kLabelSpace;
    while (hi - lo <= 1) {
        relabel_around(prev ? prev : nxt);
        lo = prev ? prev->label : 0;
        hi = nxt ? nxt->label : gusf_detail::kLabelSpace;
    }

    Block* b = new Block(ncolors_);
    b->label = lo + (hi - lo) / 2;
    b->prev = prev;
    b->next = nxt;
    if (nxt) nxt->prev = b;
    if (prev)
        prev->next = b;
    else
        head_ = b;
    if (!b->next) tail_ = b;
    by_label_.emplace(b->label, b);

    if (!index_ && head_ != tail_) {
        // second block: stand up the label index over all blocks
        index_ = std::make_unique<GvebTree>(56, ncolors_);
        for (Block* x = head_; x; x = x->next) index_insert_block(x);
    }
    return b;
}

// --- block tree maintenance --------------------------------------------------

void GusfCatalog::tree_insert_before(Block* b, Element* next, Element* leaf) {
    b->take_index(leaf);
    ++b->nleaves;
    ++work_;
    if (!b->root) {
        b->root = leaf;
        leaf->parent = nullptr;
        return;
    }
    BNode* at = next;
    if (!at) {  // append: pair with the rightmost leaf
        at = b->root;
        while (!at->is_leaf()) at = at->right;
    }
    BNode* mid = new BNode;
    mid->parent = at->parent;
    if (next) {
        mid->left = leaf;
        mid->right = at;
    } else {
        mid->left = at;
        mid->right = leaf;
    }
    at->parent = mid;
    leaf->parent = mid;
    if (mid->parent) {
        if (mid->parent->left == at)
            mid->parent->left = mid;
        else
            mid->parent->right = mid;
    } else {
        b->root = mid;
    }
    gusf_detail::refresh(mid);

    int depth = 1;
    for (BNode* v = mid; v; v = v->parent) {
        if (v != mid) gusf_detail::refresh(v);
        ++depth;
        ++work_;
    }
    if (depth <= gusf_detail::depth_limit(b->root->size)) return;

    // scapegoat: rebuild the lowest alpha-unbalanced ancestor
    BNode* child = mid;
    for (BNode* v = mid->parent; v; v = v->parent) {
        if (child->size * 10 > v->size * 7) {
            std::vector<BNode*> leaves;
            gusf_detail::collect_leaves(v, leaves);
            BNode* parent = v->parent;
            gusf_detail::delete_internal(v);
            BNode* fresh =
                gusf_detail::build_balanced(leaves.data(), static_cast<uint32_t>(leaves.size()));
            work_ += leaves.size();
            fresh->parent = parent;
            if (!parent)
                b->root = fresh;
            else if (parent->left == v)
                parent->left = fresh;
            else
                parent->right = fresh;
            return;
        }
        child = v;
    }
}

void GusfCatalog::split_block(Block* b) {
    std::vector<BNode*> leaves;
    gusf_detail::collect_leaves(b->root, leaves);
    const uint32_t half = static_cast<uint32_t>(leaves.size()) / 2;
    work_ += leaves.size();

    index_erase_block(b);
    gusf_detail::delete_internal(b->root);
    b->root = nullptr;
    Block* b2 = new_block_after(b);

    auto refill = [&](Block* blk, BNode** ls, uint32_t n) {
        blk->allleafs.assign(1, nullptr);
        blk->freelist.clear();
        blk->nleaves = n;
        std::fill(blk->heads.begin(), blk->heads.end(), nullptr);
        std::fill(blk->tails.begin(), blk->tails.end(), nullptr);
        for (uint32_t i = 0; i < n; ++i) {
            blk->take_index(ls[i]);
            for (auto& cl : ls[i]->clinks) {
                if (cl.color < 0) continue;
                cl.prev = blk->tails[static_cast<size_t>(cl.color)];
                cl.next = nullptr;
                if (cl.prev)
                    cl.prev->clinks[cl.prev->slot_of(cl.color)].next = ls[i];
                else
                    blk->heads[static_cast<size_t>(cl.color)] = ls[i];
                blk->tails[static_cast<size_t>(cl.color)] = ls[i];
            }
        }
        blk->root = gusf_detail::build_balanced(ls, n);
    };
    refill(b, leaves.data(), half);
    refill(b2, leaves.data() + half, static_cast<uint32_t>(leaves.size()) - half);
    index_insert_block(b);
    index_insert_block(b2);
}

// --- public structure ops ------------------------------------------------------

GusfCatalog::Element* GusfCatalog::insert_before(Element* next, uint64_t tag) {
    BNode* leaf = new BNode;
    leaf->tag = tag;
    Block* b;
    if (!head_) {
        b = new_block_after(nullptr);
    } else if (next) {
        b = next->block;
    } else {
        b = tail_;
    }
    tree_insert_before(b, next, leaf);
    ++live_;
    if (b->nleaves > block_cap_) split_block(b);
    maybe_rebuild();
    return leaf;
}

void GusfCatalog::remove(Element* x) {
    if (x->tombstone || x->colormask)
        throw std::invalid_argument("gusf: remove needs a live unmarked element");
    x->tombstone = true;
    --live_;
    ++dead_;
    maybe_rebuild();
}

void GusfCatalog::maybe_rebuild() {
    if (dead_ > live_ || live_ > capacity_ || (capacity_ > 32 && live_ < capacity_ / 4)) rebuild();
}

void GusfCatalog::rebuild() {
    std::vector<BNode*> keep;
    keep.reserve(live_);
    for (Block* b = head_; b;) {
        Block* nx = b->next;
        if (b->root) {
            std::vector<BNode*> leaves;
            gusf_detail::collect_leaves(b->root, leaves);
            gusf_detail::delete_internal(b->root);
            b->root = nullptr;
            for (BNode* l : leaves) {
                if (l->tombstone)
                    delete l;
                else
                    keep.push_back(l);
            }
        }
        destroy_block(b, false);
        b = nx;
    }
    head_ = tail_ = nullptr;
    index_.reset();
    by_label_.clear();
    dead_ = 0;
    work_ += keep.size();

    capacity_ = std::max<size_t>(32, 2 * keep.size());
    const double lg = std::log2(static_cast<double>(capacity_));
    const uint32_t bsize = std::max<uint32_t>(16, static_cast<uint32_t>(std::ceil(lg * lg)));
    block_cap_ = 2 * bsize;

    size_t at = 0;
    while (at < keep.size()) {
        const uint32_t n = static_cast<uint32_t>(std::min<size_t>(bsize, keep.size() - at));
        Block* b = new_block_after(tail_);
        b->nleaves = n;
        for (uint32_t i = 0; i < n; ++i) {
            BNode* l = keep[at + i];
            b->take_index(l);
            for (auto& cl : l->clinks) {
                if (cl.color < 0) continue;
                cl.prev = b->tails[static_cast<size_t>(cl.color)];
                cl.next = nullptr;
                if (cl.prev)
                    cl.prev->clinks[cl.prev->slot_of(cl.color)].next = l;
                else
                    b->heads[static_cast<size_t>(cl.color)] = l;
                b->tails[static_cast<size_t>(cl.color)] = l;
            }
        }
        b->root = gusf_detail::build_balanced(keep.data() + at, n);
        index_insert_block(b);
        at += n;
    }
}

// --- colors -------------------------------------------------------------------

void GusfCatalog::splice_color_list(Block* b, Element* x, int color) {
    Element* nx = nullptr;
    // nearest colored leaf to the right inside the block
    for (BNode* v = x; v->parent; v = v->parent) {
        if (v->parent->left == v && (v->parent->right->colormask & color_bit(color))) {
            nx = gusf_detail::descend_leftmost(v->parent->right, color_bit(color));
            break;
        }
    }
    auto& link = x->clinks[x->slot_of(color)];
    if (nx) {
        auto& nl = nx->clinks[nx->slot_of(color)];
        link.prev = nl.prev;
        link.next = nx;
        if (nl.prev)
            nl.prev->clinks[nl.prev->slot_of(color)].next = x;
        else
            b->heads[static_cast<size_t>(color)] = x;
        nl.prev = x;
    } else {
        link.prev = b->tails[static_cast<size_t>(color)];
        link.next = nullptr;
        if (link.prev)
            link.prev->clinks[link.prev->slot_of(color)].next = x;
        else
            b->heads[static_cast<size_t>(color)] = x;
        b->tails[static_cast<size_t>(color)] = x;
    }
}

void GusfCatalog::unsplice_color_list(Block* b, Element* x, int color) {
    auto& link = x->clinks[x->slot_of(color)];
    if (link.prev)
        link.prev->clinks[link.prev->slot_of(color)].next = link.next;
    else
        b->heads[static_cast<size_t>(color)] = link.next;
    if (link.next)
        link.next->clinks[link.next->slot_of(color)].prev = link.prev;
    else
        b->tails[static_cast<size_t>(color)] = link.prev;
    link = BNode::ColorLink{};
}

void GusfCatalog::mark(Element* x, int color) {
    if (x->tombstone) throw std::invalid_argument("gusf: mark on tombstone");
    if (x->colormask & color_bit(color)) throw std::invalid_argument("gusf: color present");
    const int slot = x->slot_of(-1);
    if (slot < 0) throw std::invalid_argument("gusf: color cap exceeded");
    Block* b = x->block;
    const bool block_gains = !(b->root->colormask & color_bit(color));
    x->clinks[slot].color = color;
    x->colormask |= color_bit(color);
    splice_color_list(b, x, color);

    for (BNode* v = x->parent; v; v = v->parent) {
        ++work_;
        if (!(v->colormask & color_bit(color))) {
            v->colormask |= color_bit(color);
            v->leafs_set(color, x->allleafs_idx);
        }
    }
    if (index_ && block_gains) index_->insert(b->label, color);
}

void GusfCatalog::unmark(Element* x, int color) {
    if (!(x->colormask & color_bit(color))) throw std::invalid_argument("gusf: color absent");
    Block* b = x->block;
    unsplice_color_list(b, x, color);  // also clears the link slot
    x->colormask &= ~color_bit(color);

    for (BNode* v = x->parent; v; v = v->parent) {
        ++work_;
        if (v->leafs_at(color) != x->allleafs_idx) continue;
        const BNode* src = (v->left->colormask & color_bit(color))    ? v->left
                           : (v->right->colormask & color_bit(color)) ? v->right
                                                                      : nullptr;
        if (src) {
            v->leafs_set(color, src->is_leaf() ? src->allleafs_idx : src->leafs_at(color));
        } else {
            v->leafs_erase(color);
            v->colormask &= ~color_bit(color);
        }
    }
    if (index_ && !(b->root->colormask & color_bit(color))) index_->erase(b->label, color);
}

// --- queries ------------------------------------------------------------------

GusfCatalog::Element* GusfCatalog::find_next(const Element* x, ColorSet cq) const {
    ++work_;
    if (!cq) return nullptr;
    if (x->colormask & cq) return const_cast<Element*>(x);
    for (const BNode* v = x; v->parent; v = v->parent) {
        ++work_;
        if (v->parent->left == v && (v->parent->right->colormask & cq))
            return gusf_detail::descend_leftmost(v->parent->right, cq);
    }
    if (!index_) return nullptr;
    const auto hit = index_->find(x->block->label + 1, cq);
    if (!hit) return nullptr;
    return gusf_detail::descend_leftmost(by_label_.at(hit->first)->root, cq);
}

GusfCatalog::Element* GusfCatalog::find_prev(const Element* x, ColorSet cq) const {
    ++work_;
    if (!cq) return nullptr;
    if (x->colormask & cq) return const_cast<Element*>(x);
    for (const BNode* v = x; v->parent; v = v->parent) {
        ++work_;
        if (v->parent->right == v && (v->parent->left->colormask & cq))
            return gusf_detail::descend_rightmost(v->parent->left, cq);
    }
    if (!index_ || x->block->label == 0) return nullptr;
    const auto hit = index_->find_prev(x->block->label - 1, cq);
    if (!hit) return nullptr;
    return gusf_detail::descend_rightmost(by_label_.at(hit->first)->root, cq);
}

GusfCatalog::Element* GusfCatalog::first_colored(ColorSet cq) const {
    for (Block* b = head_; b; b = b->next)
        if (b->root && (b->root->colormask & cq))
            return gusf_detail::descend_leftmost(b->root, cq);
    return nullptr;
}

std::vector<GusfCatalog::Element*> GusfCatalog::report(const Element* y1, const Element* y2,
                                                       ColorSet cq) const {
    std::vector<Element*> out;
    if (!cq) return out;
    auto emit = [&](const BNode* leaf) {
        if (leaf->colormask & cq) out.push_back(const_cast<Element*>(leaf));
    };
    work_ += 2;

    if (y1->block == y2->block) {
        if (y1 == y2) {
            emit(y1);
            return out;
        }
        std::vector<const BNode*> path;
        for (const BNode* v = y1; v; v = v->parent) path.push_back(v);
        const BNode* lca = nullptr;
        for (const BNode* v = y2; v; v = v->parent) {
            if (std::find(path.begin(), path.end(), v) != path.end()) {
                lca = v;
                break;
            }
        }
        emit(y1);
        for (const BNode* v = y1; v->parent != lca; v = v->parent) {
            ++work_;
            if (v->parent->left == v) gusf_detail::collect_colored(v->parent->right, cq, out);
        }
        for (const BNode* v = y2; v->parent != lca; v = v->parent) {
            ++work_;
            if (v->parent->right == v) gusf_detail::collect_colored(v->parent->left, cq, out);
        }
        emit(y2);
        return out;
    }

    // suffix of y1's block, prefix of y2's block
    emit(y1);
    for (const BNode* v = y1; v->parent; v = v->parent) {
        ++work_;
        if (v->parent->left == v) gusf_detail::collect_colored(v->parent->right, cq, out);
    }
    emit(y2);
    for (const BNode* v = y2; v->parent; v = v->parent) {
        ++work_;
        if (v->parent->right == v) gusf_detail::collect_colored(v->parent->left, cq, out);
    }
    // whole blocks strictly between, via the label index and per-color lists
    if (index_ && y1->block->label + 1 <= y2->block->label - 1) {
        const auto blocks = index_->report(y1->block->label + 1, y2->block->label - 1, cq);
        for (const auto& [label, c] : blocks) {
            Block* b = by_label_.at(label);
            for (BNode* l = b->heads[static_cast<size_t>(c)]; l;
                 l = l->clinks[l->slot_of(c)].next) {
                // an element with two queried colors arrives once per color;
                // keep it only under its lowest queried color
                if (__builtin_ctzll(l->colormask & cq) == c) out.push_back(l);
                ++work_;
            }
        }
    }
    return out;
}

bool GusfCatalog::precedes(const Element* a, const Element* b) const {
    if (a == b) return false;
    if (a->block != b->block) return a->block->label < b->block->label;
    std::vector<const BNode*> path;
    for (const BNode* v = a; v; v = v->parent) path.push_back(v);
    for (const BNode* v = b->parent; v; v = v->parent) {
        const auto it = std::find(path.begin(), path.end(), v);
        if (it != path.end()) return v->left == *(it - 1);  // a on the left of the lca
    }
    return false;  // unreachable for well-formed inputs
}

void GusfCatalog::for_each_live(const std::function<void(Element*)>& fn) const {
    for (Block* b = head_; b; b = b->next) {
        if (!b->root) continue;
        std::vector<BNode*> leaves;
        gusf_detail::collect_leaves(b->root, leaves);
        for (BNode* l : leaves)
            if (!l->tombstone) fn(l);
    }
}

// --- audit --------------------------------------------------------------------

namespace {

void audit_node(const BNode* v, const Block* b) {
    if (v->is_leaf()) {
        if (v->block != b) throw std::logic_error("audit: leaf block link");
        ColorSet cm = 0;
        for (const auto& cl : v->clinks)
            if (cl.color >= 0) cm |= color_bit(cl.color);
        if (cm != v->colormask) throw std::logic_error("audit: leaf colormask");
        if (v->tombstone && cm) throw std::logic_error("audit: colored tombstone");
        if (b->allleafs[v->allleafs_idx] != v) throw std::logic_error("audit: allleafs");
        return;
    }
    if (v->size != v->left->size + v->right->size) throw std::logic_error("audit: size");
    if (v->colormask != (v->left->colormask | v->right->colormask))
        throw std::logic_error("audit: colormask");
    if (v->left->parent != v || v->right->parent != v) throw std::logic_error("audit: parent");
    ColorSet seen = 0;
    for (const auto& [c, idx] : v->leafs) {
        if (idx == 0 || idx >= b->allleafs.size()) throw std::logic_error("audit: leafs idx");
        const BNode* leaf = b->allleafs[idx];
        if (!leaf || !(leaf->colormask & color_bit(c)))
            throw std::logic_error("audit: leafs target color");
        const BNode* w = leaf;
        while (w && w != v) w = w->parent;
        if (w != v) throw std::logic_error("audit: leafs not descendant");
        seen |= color_bit(c);
    }
    if (seen != v->colormask) throw std::logic_error("audit: leafs vs colormask");
    audit_node(v->left, b);
    audit_node(v->right, b);
}

}  // namespace

void GusfCatalog::audit() const {
    uint64_t prev_label = 0;
    bool first = true;
    size_t live = 0, dead = 0;
    for (Block* b = head_; b; b = b->next) {
        if (!first && b->label <= prev_label) throw std::logic_error("audit: label order");
        prev_label = b->label;
        first = false;
        if (!b->root) throw std::logic_error("audit: empty block");
        if (b->root->size != b->nleaves) throw std::logic_error("audit: nleaves");
        if (by_label_.at(b->label) != b) throw std::logic_error("audit: by_label");
        audit_node(b->root, b);
        std::vector<BNode*> leaves;
        gusf_detail::collect_leaves(b->root, leaves);
        for (BNode* l : leaves) (l->tombstone ? dead : live)++;
        for (int c = 0; c < ncolors_; ++c) {
            std::vector<const BNode*> want;
            for (const BNode* l : leaves)
                if (l->colormask & color_bit(c)) want.push_back(l);
            size_t i = 0;
            for (const BNode* l = b->heads[static_cast<size_t>(c)]; l;
                 l = l->clinks[l->slot_of(c)].next) {
                if (i >= want.size() || want[i] != l) throw std::logic_error("audit: color list");
                ++i;
            }
            if (i != want.size()) throw std::logic_error("audit: color list size");
            if (!want.empty() && b->tails[static_cast<size_t>(c)] != want.back())
                throw std::logic_error("audit: color tail");
        }
        if (index_) {
            for (int c = 0; c < ncolors_; ++c) {
                const bool has = (b->root->colormask & color_bit(c)) != 0;
                if (has != index_->contains(b->label, c))
                    throw std::logic_error("audit: index colors");
            }
        }
        if (b->nleaves > block_cap_) throw std::logic_error("audit: block too large");
    }
    if (live != live_ || dead != dead_) throw std::logic_error("audit: counts");
}

}  // namespace retro
