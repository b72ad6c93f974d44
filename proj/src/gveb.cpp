#include "retro/gveb.hpp"

#include <bit>
#include <stdexcept>

namespace retro {

namespace {

uint64_t mask_below(int n) { return n >= 64 ? ~uint64_t{0} : (uint64_t{1} << n) - 1; }

}  // namespace

/// Base nodes (bits <= 6) hold one bitmask word per color. Internal nodes
/// keep per-color min/max keys out of the recursion; strictly-between keys
/// live in bottom[hi] as their low halves, and top mirrors which buckets
/// hold which colors.
struct GvebTree::Node {
    uint8_t bits;
    ColorSet live = 0;
    std::vector<uint64_t> words;  // base: per-color bitmask
    std::vector<uint64_t> min_key, max_key;
    std::unordered_map<uint64_t, std::unique_ptr<Node>> bottom;
    std::unique_ptr<Node> top;

    Node(int b, int ncolors) : bits(static_cast<uint8_t>(b)) {
        if (is_base())
            words.assign(static_cast<size_t>(ncolors), 0);
        else {
            min_key.assign(static_cast<size_t>(ncolors), 0);
            max_key.assign(static_cast<size_t>(ncolors), 0);
        }
    }

    bool is_base() const { return bits <= 6; }
    int half() const { return bits / 2; }
    uint64_t max_key_val() const { return bits >= 64 ? ~uint64_t{0} : (uint64_t{1} << bits) - 1; }
    uint64_t hi(uint64_t k) const { return k >> half(); }
    uint64_t lo(uint64_t k) const { return k & mask_below(half()); }

    uint64_t min_of_color(int c) const {
        return is_base() ? static_cast<uint64_t>(__builtin_ctzll(words[static_cast<size_t>(c)]))
                         : min_key[static_cast<size_t>(c)];
    }
    uint64_t max_of_color(int c) const {
        return is_base()
                   ? static_cast<uint64_t>(63 - __builtin_clzll(words[static_cast<size_t>(c)]))
                   : max_key[static_cast<size_t>(c)];
    }
};

GvebTree::GvebTree(int universe_bits, int ncolors) : ncolors_(ncolors) {
    if (ncolors < 1 || ncolors > 64) throw std::invalid_argument("gveb: 1..64 colors");
    bits_ = 4;
    while (bits_ < universe_bits) bits_ *= 2;
    root_ = std::make_unique<Node>(bits_, ncolors_);
}

GvebTree::~GvebTree() = default;
GvebTree::GvebTree(GvebTree&&) noexcept = default;
GvebTree& GvebTree::operator=(GvebTree&&) noexcept = default;

void GvebTree::insert_rec(Node& n, uint64_t key, int color) {
    ++levels_touched_;
    const ColorSet cb = color_bit(color);
    if (n.is_base()) {
        uint64_t& w = n.words[static_cast<size_t>(color)];
        if (w & (uint64_t{1} << key)) throw std::invalid_argument("gveb: duplicate insert");
        w |= uint64_t{1} << key;
        n.live |= cb;
        return;
    }
    auto& mn = n.min_key[static_cast<size_t>(color)];
    auto& mx = n.max_key[static_cast<size_t>(color)];
    if (!(n.live & cb)) {
        mn = mx = key;
        n.live |= cb;
        return;
    }
    if (key == mn || key == mx) throw std::invalid_argument("gveb: duplicate insert");
    if (mn == mx) {  // second element of this color
        if (key < mn)
            mn = key;
        else
            mx = key;
        return;
    }
    if (key < mn)
        std::swap(key, mn);
    else if (key > mx)
        std::swap(key, mx);
    const uint64_t b = n.hi(key);
    auto it = n.bottom.find(b);
    if (it == n.bottom.end())
        it = n.bottom.emplace(b, std::make_unique<Node>(n.half(), ncolors_)).first;
    Node& bot = *it->second;
    const bool had_color = (bot.live & cb) != 0;
    insert_rec(bot, n.lo(key), color);
    if (!had_color) {
        if (!n.top) n.top = std::make_unique<Node>(n.half(), ncolors_);
        insert_rec(*n.top, b, color);
    }
}

void GvebTree::erase_rec(Node& n, uint64_t key, int color) {
    ++levels_touched_;
    const ColorSet cb = color_bit(color);
    if (!(n.live & cb)) throw std::invalid_argument("gveb: missing delete");
    if (n.is_base()) {
        uint64_t& w = n.words[static_cast<size_t>(color)];
        if (!(w & (uint64_t{1} << key))) throw std::invalid_argument("gveb: missing delete");
        w &= ~(uint64_t{1} << key);
        if (!w) n.live &= ~cb;
        return;
    }
    auto& mn = n.min_key[static_cast<size_t>(color)];
    auto& mx = n.max_key[static_cast<size_t>(color)];
    const bool rec_has = n.top && (n.top->live & cb);
    if (mn == mx) {
        if (key != mn) throw std::invalid_argument("gveb: missing delete");
        n.live &= ~cb;
        return;
    }
    if (key == mn || key == mx) {
        if (!rec_has) {  // two elements, both held in the arrays
            if (key == mn)
                mn = mx;
            else
                mx = mn;
            return;
        }
        const uint64_t b = key == mn ? n.top->min_of_color(color) : n.top->max_of_color(color);
        Node& bot = *n.bottom.at(b);
        const uint64_t l = key == mn ? bot.min_of_color(color) : bot.max_of_color(color);
        if (key == mn)
            mn = (b << n.half()) | l;
        else
            mx = (b << n.half()) | l;
        erase_rec(bot, l, color);
        if (!(bot.live & cb)) erase_rec(*n.top, b, color);
        if (bot.live == 0) n.bottom.erase(b);
        if (n.top->live == 0) n.top.reset();
        return;
    }
    if (key < mn || key > mx) throw std::invalid_argument("gveb: missing delete");
    const uint64_t b = n.hi(key);
    auto it = n.bottom.find(b);
    if (it == n.bottom.end()) throw std::invalid_argument("gveb: missing delete");
    Node& bot = *it->second;
    erase_rec(bot, n.lo(key), color);
    if (!(bot.live & cb)) erase_rec(*n.top, b, color);
    if (bot.live == 0) n.bottom.erase(it);
    if (n.top && n.top->live == 0) n.top.reset();
}

std::optional<std::pair<uint64_t, int>> GvebTree::find_rec(const Node& n, uint64_t key,
                                                           ColorSet cq) const {
    ++levels_touched_;
    if (key > n.max_key_val()) return std::nullopt;
    const ColorSet mask = cq & n.live;
    if (!mask) return std::nullopt;

    std::optional<std::pair<uint64_t, int>> best;
    auto offer = [&](uint64_t k, int c) {
        if (!best || k < best->first) best = {{k, c}};
    };

    if (n.is_base()) {
        for (ColorSet m = mask; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            const uint64_t w = n.words[static_cast<size_t>(c)] & ~mask_below(static_cast<int>(key));
            if (w) offer(static_cast<uint64_t>(__builtin_ctzll(w)), c);
        }
        return best;
    }

    ColorSet deep = 0;  // colors whose successor may sit in the recursion
    for (ColorSet m = mask; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        const uint64_t mn = n.min_key[static_cast<size_t>(c)];
        const uint64_t mx = n.max_key[static_cast<size_t>(c)];
        if (mn >= key) {
            offer(mn, c);
        } else if (mx >= key) {
            offer(mx, c);
            deep |= color_bit(c);
        }
    }
    if (!deep || !n.top) return best;

    const uint64_t b = n.hi(key);
    auto it = n.bottom.find(b);
    ColorSet in_bucket = 0;
    if (it != n.bottom.end()) {
        const Node& bot = *it->second;
        for (ColorSet m = deep & bot.live; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            if (bot.max_of_color(c) >= n.lo(key)) in_bucket |= color_bit(c);
        }
    }
    if (in_bucket) {
        const auto r = find_rec(*it->second, n.lo(key), in_bucket);
        offer((b << n.half()) | r->first, r->second);
        return best;
    }
    const auto rt = find_rec(*n.top, b + 1, deep);
    if (rt) {
        const Node& bot = *n.bottom.at(rt->first);
        std::optional<std::pair<uint64_t, int>> sub;
        for (ColorSet m = deep & bot.live; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            const uint64_t v = bot.min_of_color(c);
            if (!sub || v < sub->first) sub = {{v, c}};
        }
        offer((rt->first << n.half()) | sub->first, sub->second);
    }
    return best;
}

std::optional<std::pair<uint64_t, int>> GvebTree::find_prev_rec(const Node& n, uint64_t key,
                                                                ColorSet cq) const {
    ++levels_touched_;
    const ColorSet mask = cq & n.live;
    if (!mask) return std::nullopt;
    if (key > n.max_key_val()) key = n.max_key_val();

    std::optional<std::pair<uint64_t, int>> best;
    auto offer = [&](uint64_t k, int c) {
        if (!best || k > best->first) best = {{k, c}};
    };

    if (n.is_base()) {
        for (ColorSet m = mask; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            const uint64_t w =
                n.words[static_cast<size_t>(c)] & mask_below(static_cast<int>(key) + 1);
            if (w) offer(static_cast<uint64_t>(63 - __builtin_clzll(w)), c);
        }
        return best;
    }

    ColorSet deep = 0;
    for (ColorSet m = mask; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        const uint64_t mn = n.min_key[static_cast<size_t>(c)];
        const uint64_t mx = n.max_key[static_cast<size_t>(c)];
        if (mx <= key) {
            offer(mx, c);
        } else if (mn <= key) {
            offer(mn, c);
            deep |= color_bit(c);
        }
    }
    if (!deep || !n.top) return best;

    const uint64_t b = n.hi(key);
    auto it = n.bottom.find(b);
    ColorSet in_bucket = 0;
    if (it != n.bottom.end()) {
        const Node& bot = *it->second;
        for (ColorSet m = deep & bot.live; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            if (bot.min_of_color(c) <= n.lo(key)) in_bucket |= color_bit(c);
        }
    }
    if (in_bucket) {
        const auto r = find_prev_rec(*it->second, n.lo(key), in_bucket);
        offer((b << n.half()) | r->first, r->second);
        return best;
    }
    if (b > 0) {
        const auto rt = find_prev_rec(*n.top, b - 1, deep);
        if (rt) {
            const Node& bot = *n.bottom.at(rt->first);
            std::optional<std::pair<uint64_t, int>> sub;
            for (ColorSet m = deep & bot.live; m;) {
                const int c = __builtin_ctzll(m);
                m &= m - 1;
                const uint64_t v = bot.max_of_color(c);
                if (!sub || v > sub->first) sub = {{v, c}};
            }
            offer((rt->first << n.half()) | sub->first, sub->second);
        }
    }
    return best;
}

void GvebTree::reportany_rec(const Node& n, uint64_t i, uint64_t j, ColorSet& cq, uint64_t prefix,
                             std::vector<std::pair<uint64_t, int>>& out) const {
    if (!cq || i > j) return;
    if (j > n.max_key_val()) j = n.max_key_val();
    if (n.is_base()) {
        const uint64_t range =
            mask_below(static_cast<int>(j) + 1) ^ mask_below(static_cast<int>(i));
        for (ColorSet m = cq & n.live; m;) {
            const int c = __builtin_ctzll(m);
            m &= m - 1;
            const uint64_t w = n.words[static_cast<size_t>(c)] & range;
            if (w) {
                out.emplace_back(prefix | static_cast<uint64_t>(__builtin_ctzll(w)), c);
                cq &= ~color_bit(c);
            }
        }
        return;
    }

    const RankIndex mins{n.min_key.data(), n.live & cq};
    ColorSet cr = mins.report(i, j);
    for (ColorSet m = cr; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        out.emplace_back(prefix | n.min_key[static_cast<size_t>(c)], c);
    }
    cq &= ~cr;
    const RankIndex maxs{n.max_key.data(), n.live & cq};
    cr = maxs.report(i, j);
    for (ColorSet m = cr; m;) {
        const int c = __builtin_ctzll(m);
        m &= m - 1;
        out.emplace_back(prefix | n.max_key[static_cast<size_t>(c)], c);
    }
    cq &= ~cr;
    if (!cq) return;
    // remaining colors have their min below i and max above j; with i == 0
    // or j == N-1 no element of such a color can lie inside the range
    if (i == 0 || j == n.max_key_val()) return;
    if (!n.top) return;

    const uint64_t bi = n.hi(i), bj = n.hi(j);
    auto bot = [&](uint64_t b) -> const Node* {
        auto it = n.bottom.find(b);
        return it == n.bottom.end() ? nullptr : it->second.get();
    };
    if (bi == bj) {
        if (const Node* bn = bot(bi))
            reportany_rec(*bn, n.lo(i), n.lo(j), cq, prefix | (bi << n.half()), out);
        return;
    }
    if (const Node* bn = bot(bi))
        reportany_rec(*bn, n.lo(i), mask_below(n.half()), cq, prefix | (bi << n.half()), out);
    if (cq && bi + 1 <= bj - 1) {
        std::vector<std::pair<uint64_t, int>> buckets;
        reportany_rec(*n.top, bi + 1, bj - 1, cq, 0, buckets);
        for (const auto& [b, c] : buckets) {
            const Node& bn = *n.bottom.at(b);
            out.emplace_back(prefix | (b << n.half()) | bn.min_of_color(c), c);
        }
    }
    if (cq)
        if (const Node* bn = bot(bj))
            reportany_rec(*bn, 0, n.lo(j), cq, prefix | (bj << n.half()), out);
}

void GvebTree::insert(uint64_t key, int color) {
    if (key > root_->max_key_val()) throw std::invalid_argument("gveb: key outside universe");
    const auto succ = find(key, color_bit(color));
    if (succ && succ->first == key) throw std::invalid_argument("gveb: duplicate insert");
    const auto pred = find_prev(key, color_bit(color));
    insert_rec(*root_, key, color);
    ++size_;
    Links l{kNone, kNone};
    if (pred) {
        l.prev = pred->first;
        links_.at({pred->first, color}).next = key;
    }
    if (succ) {
        l.next = succ->first;
        links_.at({succ->first, color}).prev = key;
    }
    links_.emplace(KeyColor{key, color}, l);
}

void GvebTree::erase(uint64_t key, int color) {
    erase_rec(*root_, key, color);
    --size_;
    const auto it = links_.find({key, color});
    const Links l = it->second;
    links_.erase(it);
    if (l.prev != kNone) links_.at({l.prev, color}).next = l.next;
    if (l.next != kNone) links_.at({l.next, color}).prev = l.prev;
}

std::optional<std::pair<uint64_t, int>> GvebTree::find(uint64_t key, ColorSet cq) const {
    if (key > root_->max_key_val()) return std::nullopt;
    return find_rec(*root_, key, cq);
}

std::optional<std::pair<uint64_t, int>> GvebTree::find_prev(uint64_t key, ColorSet cq) const {
    return find_prev_rec(*root_, key, cq);
}

std::vector<std::pair<uint64_t, int>> GvebTree::reportany(uint64_t i, uint64_t j,
                                                          ColorSet cq) const {
    std::vector<std::pair<uint64_t, int>> out;
    ColorSet colors = cq;
    if (i <= j) reportany_rec(*root_, i, j, colors, 0, out);
    return out;
}

std::vector<std::pair<uint64_t, int>> GvebTree::report(uint64_t i, uint64_t j, ColorSet cq) const {
    std::vector<std::pair<uint64_t, int>> out = reportany(i, j, cq);
    const size_t seeds = out.size();
    for (size_t s = 0; s < seeds; ++s) {
        const auto [k, c] = out[s];
        for (uint64_t v = links_.at({k, c}).next; v != kNone && v <= j;
             v = links_.at({v, c}).next)
            out.emplace_back(v, c);
        for (uint64_t v = links_.at({k, c}).prev; v != kNone && v >= i;
             v = links_.at({v, c}).prev)
            out.emplace_back(v, c);
    }
    return out;
}

bool GvebTree::contains(uint64_t key, int color) const {
    return links_.count({key, color}) != 0;
}

RankIndex GvebTree::min_rank() const {
    return RankIndex{root_->is_base() ? nullptr : root_->min_key.data(), root_->live};
}

RankIndex GvebTree::max_rank() const {
    return RankIndex{root_->is_base() ? nullptr : root_->max_key.data(), root_->live};
}

}  // namespace retro
