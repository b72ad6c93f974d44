#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "retro/gusf.hpp"

using namespace retro;
using Element = GusfCatalog::Element;

namespace {

// plain ordered list with color sets; positions are indices
struct ListModel {
    struct Item {
        uint64_t tag;
        ColorSet colors = 0;
        Element* elem = nullptr;
    };
    std::vector<Item> items;  // live items only, in list order

    size_t index_of(const Element* e) const {
        for (size_t i = 0; i < items.size(); ++i)
            if (items[i].elem == e) return i;
        REQUIRE(false);
        return 0;
    }

    Element* find_next(size_t from, ColorSet cq) const {
        for (size_t i = from; i < items.size(); ++i)
            if (items[i].colors & cq) return items[i].elem;
        return nullptr;
    }
    Element* find_prev(size_t from, ColorSet cq) const {
        for (size_t i = from + 1; i-- > 0;)
            if (items[i].colors & cq) return items[i].elem;
        return nullptr;
    }
    std::set<Element*> report(size_t a, size_t b, ColorSet cq) const {
        std::set<Element*> out;
        for (size_t i = a; i <= b && i < items.size(); ++i)
            if (items[i].colors & cq) out.insert(items[i].elem);
        return out;
    }
};

}  // namespace

TEST_CASE("gusf basics") {
    GusfCatalog cat(8);
    Element* a = cat.push_back(1);
    CHECK(cat.live_size() == 1);
    CHECK(cat.block_count() == 1);
    CHECK(GusfCatalog::tag(a) == 1);

    // x itself colored in cq is its own successor
    cat.mark(a, 3);
    CHECK(cat.find_next(a, color_bit(3)) == a);
    CHECK(cat.find_next(a, color_bit(2)) == nullptr);
    CHECK(cat.find_prev(a, color_bit(3)) == a);

    Element* b = cat.push_back(2);
    CHECK(cat.precedes(a, b));
    CHECK_FALSE(cat.precedes(b, a));
    CHECK_FALSE(cat.precedes(a, a));
    Element* mid = cat.insert_before(b, 3);
    CHECK(cat.precedes(a, mid));
    CHECK(cat.precedes(mid, b));

    // mark then unmark leaves the catalog unchanged
    cat.mark(mid, 1);
    cat.unmark(mid, 1);
    CHECK(GusfCatalog::colors(mid) == 0);
    CHECK(cat.find_next(mid, color_bit(1)) == nullptr);
    CHECK_THROWS_AS(cat.unmark(mid, 1), std::invalid_argument);
    CHECK_THROWS_AS(cat.mark(a, 3), std::invalid_argument);

    // color cap
    cat.mark(mid, 1);
    cat.mark(mid, 2);
    CHECK_THROWS_AS(cat.mark(mid, 4), std::invalid_argument);
    CHECK_THROWS_AS(cat.remove(mid), std::invalid_argument);
    cat.unmark(mid, 1);
    cat.unmark(mid, 2);
    cat.remove(mid);
    CHECK(cat.live_size() == 2);
    cat.audit();
}

TEST_CASE("gusf report basics") {
    GusfCatalog cat(4);
    Element* a = cat.push_back(10);
    Element* b = cat.push_back(20);
    Element* c = cat.push_back(30);
    cat.mark(a, 0);
    cat.mark(c, 1);
    auto r = cat.report(a, a, color_bit(0));
    REQUIRE(r.size() == 1);
    CHECK(r[0] == a);
    CHECK(cat.report(a, c, 0).empty());
    auto all = cat.report(a, c, color_bit(0) | color_bit(1));
    CHECK(all.size() == 2);
    auto none = cat.report(b, b, color_bit(0) | color_bit(1));
    CHECK(none.empty());
}

TEST_CASE("gusf split on overflow") {
    GusfCatalog cat(4);
    std::vector<Element*> es;
    uint64_t t = 0;
    for (int i = 0; i < 200; ++i) es.push_back(cat.push_back(t++));
    const size_t before = cat.block_count();
    const uint32_t cap = cat.block_limit();
    // appends land in the tail block until it overflows and splits once
    size_t after = before;
    for (uint32_t i = 0; i <= cap && after == before; ++i) {
        es.push_back(cat.push_back(t++));
        after = cat.block_count();
    }
    CHECK(after == before + 1);
    cat.audit();
    for (size_t i = 1; i < es.size(); ++i) CHECK(cat.precedes(es[i - 1], es[i]));
}

TEST_CASE("gusf randomized oracle equivalence") {
    std::mt19937_64 rng(4242);
    for (int seed = 0; seed < 10; ++seed) {
        const int ncolors = 2 + static_cast<int>(rng() % 7);
        GusfCatalog cat(ncolors);
        ListModel model;
        uint64_t next_tag = 0;

        for (int op = 0; op < 3000; ++op) {
            const int what = static_cast<int>(rng() % 12);
            if (what < 4 || model.items.empty()) {
                // add at a random position
                const size_t pos = model.items.empty() ? 0 : rng() % (model.items.size() + 1);
                Element* e;
                if (pos == model.items.size())
                    e = cat.push_back(next_tag);
                else
                    e = cat.insert_before(model.items[pos].elem, next_tag);
                model.items.insert(model.items.begin() + static_cast<ptrdiff_t>(pos),
                                   {next_tag, 0, e});
                ++next_tag;
            } else if (what < 6) {
                // toggle a mark
                const size_t i = rng() % model.items.size();
                auto& it = model.items[i];
                const int c = static_cast<int>(rng() % static_cast<uint64_t>(ncolors));
                if (it.colors & color_bit(c)) {
                    cat.unmark(it.elem, c);
                    it.colors &= ~color_bit(c);
                } else if (__builtin_popcountll(it.colors) < GusfCatalog::kColorCap) {
                    cat.mark(it.elem, c);
                    it.colors |= color_bit(c);
                }
            } else if (what < 7) {
                // remove (colors first)
                const size_t i = rng() % model.items.size();
                auto& it = model.items[i];
                for (ColorSet m = it.colors; m;) {
                    const int c = __builtin_ctzll(m);
                    m &= m - 1;
                    cat.unmark(it.elem, c);
                }
                cat.remove(it.elem);
                model.items.erase(model.items.begin() + static_cast<ptrdiff_t>(i));
            } else if (what < 10) {
                const size_t i = rng() % model.items.size();
                const ColorSet cq = rng();
                CHECK(cat.find_next(model.items[i].elem, cq) == model.find_next(i, cq));
                CHECK(cat.find_prev(model.items[i].elem, cq) == model.find_prev(i, cq));
            } else {
                size_t i = rng() % model.items.size();
                size_t j = rng() % model.items.size();
                if (i > j) std::swap(i, j);
                const ColorSet cq = rng();
                const auto got =
                    cat.report(model.items[i].elem, model.items[j].elem, cq);
                std::set<Element*> got_set(got.begin(), got.end());
                CHECK(got_set.size() == got.size());
                CHECK(got_set == model.report(i, j, cq));
            }
        }
        cat.audit();
        CHECK(cat.live_size() == model.items.size());
        // order agreement over the survivors
        std::vector<Element*> inorder;
        cat.for_each_live([&](Element* e) { inorder.push_back(e); });
        REQUIRE(inorder.size() == model.items.size());
        for (size_t i = 0; i < inorder.size(); ++i) CHECK(inorder[i] == model.items[i].elem);
    }
}

TEST_CASE("gusf tombstone rebuild keeps pointers valid") {
    GusfCatalog cat(2);
    std::vector<Element*> es;
    for (int i = 0; i < 500; ++i) es.push_back(cat.push_back(static_cast<uint64_t>(i)));
    cat.mark(es[499], 1);
    // removing most elements forces at least one global rebuild
    for (int i = 0; i < 400; ++i) cat.remove(es[static_cast<size_t>(i)]);
    cat.audit();
    CHECK(cat.live_size() == 100);
    CHECK(GusfCatalog::tag(es[400]) == 400);
    CHECK(cat.find_next(es[400], color_bit(1)) == es[499]);
    for (int i = 401; i < 500; ++i) CHECK(cat.precedes(es[400], es[static_cast<size_t>(i)]));
}

TEST_CASE("gusf amortized structural work") {
    std::mt19937_64 rng(7);
    for (const int m : {1000, 10000, 100000}) {
        GusfCatalog cat(8);
        std::vector<Element*> es;
        cat.reset_counter();
        for (int i = 0; i < m; ++i) {
            const size_t pos = es.empty() ? 0 : rng() % (es.size() + 1);
            Element* e = pos == es.size() ? cat.push_back(static_cast<uint64_t>(i))
                                          : cat.insert_before(es[pos], static_cast<uint64_t>(i));
            es.insert(es.begin() + static_cast<ptrdiff_t>(pos), e);
            if (i % 3 == 0) {
                cat.mark(e, static_cast<int>(rng() % 8));
            }
        }
        const double loglog = std::log2(std::max(2.0, std::log2(double(m))));
        // generous constants; rebuild cost shows up as the additive term
        CHECK(double(cat.structural_work()) <= 40.0 * double(m) * loglog + 64.0 * double(m));
    }
}
