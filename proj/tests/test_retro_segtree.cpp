#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "retro/retro_segtree.hpp"

using namespace retro;

namespace {

using Tree = RetroSegTree<uint64_t>;

// flat timeline reference for 1-D keys
struct Timeline {
    struct Seg {
        uint64_t key;
        long long a, b;
        uint64_t handle;
    };
    std::vector<Seg> segs;

    std::set<uint64_t> report(long long t, uint64_t y, uint64_t z) const {
        std::set<uint64_t> out;
        for (const auto& s : segs)
            if (s.a <= t && (s.b == kEndInfinity || t < s.b) && y <= s.key && s.key <= z)
                out.insert(s.handle);
        return out;
    }
    std::optional<uint64_t> succ(long long t, uint64_t y) const {
        std::optional<std::pair<uint64_t, uint64_t>> best;
        for (const auto& s : segs) {
            if (!(s.a <= t && (s.b == kEndInfinity || t < s.b)) || s.key < y) continue;
            if (!best || std::pair(s.key, s.handle) < *best) best = {{s.key, s.handle}};
        }
        if (!best) return std::nullopt;
        return best->second;
    }
    std::optional<uint64_t> pred(long long t, uint64_t y) const {
        std::optional<std::pair<uint64_t, uint64_t>> best;
        for (const auto& s : segs) {
            if (!(s.a <= t && (s.b == kEndInfinity || t < s.b)) || s.key > y) continue;
            if (!best || std::pair(s.key, s.handle) > *best) best = {{s.key, s.handle}};
        }
        if (!best) return std::nullopt;
        return best->second;
    }
};

std::set<uint64_t> handles(const std::vector<Tree::Hit>& hits) {
    std::set<uint64_t> out;
    for (const auto& h : hits) out.insert(h.handle);
    return out;
}

}  // namespace

TEST_CASE("single lifespan") {
    Tree t;
    const uint64_t h = t.insert(10, 1, 5);
    t.audit();
    for (long long q = -3; q < 9; ++q) {
        const auto got = t.report_range(q, 0, 100);
        if (q >= 1 && q < 5) {
            REQUIRE(got.size() == 1);
            CHECK(got[0].handle == h);
        } else {
            CHECK(got.empty());
        }
    }
    t.erase(h);
    t.audit();
    CHECK(t.empty());
    CHECK(t.report_range(3, 0, 100).empty());
    CHECK(t.catalog_entries() == 0);
}

TEST_CASE("two overlapping lifespans") {
    Tree t;
    const uint64_t h1 = t.insert(10, 1, 5);
    const uint64_t h2 = t.insert(20, 3, 9);
    t.audit();
    CHECK(handles(t.report_range(4, 0, 100)) == std::set<uint64_t>{h1, h2});
    CHECK(handles(t.report_range(6, 0, 100)) == std::set<uint64_t>{h2});
    CHECK(t.report_range(0, 0, 100).empty());
    CHECK(t.report_range(4, 21, 100).empty());  // y above all keys
    CHECK(handles(t.report_range(4, 10, 10)) == std::set<uint64_t>{h1});
}

TEST_CASE("intro example via succ") {
    // X = {1,4,7,10,13}, x inserted at time x, never deleted
    Tree t;
    for (uint64_t x : {1, 4, 7, 10, 13})
        t.insert(x, static_cast<long long>(x), kEndInfinity);
    auto s = t.succ(12, 6);
    REQUIRE(s.has_value());
    CHECK(*s->key == 7);
    // retroactively add 6 at time 6
    t.insert(6, 6, kEndInfinity);
    s = t.succ(12, 6);
    REQUIRE(s.has_value());
    CHECK(*s->key == 6);
    // and a predecessor probe
    auto p = t.pred(12, 6);
    REQUIRE(p.has_value());
    CHECK(*p->key == 6);
    CHECK_FALSE(t.succ(0, 0).has_value());
    t.audit();
}

TEST_CASE("open-ended and shared timestamps") {
    Tree t;
    const uint64_t a = t.insert(5, 2, kEndInfinity);
    const uint64_t b = t.insert(7, 2, 4);  // same start timestamp
    const uint64_t c = t.insert(9, 4, 6);  // start at b's end
    t.audit();
    CHECK(handles(t.report_all(2)) == std::set<uint64_t>{a, b});
    CHECK(handles(t.report_all(3)) == std::set<uint64_t>{a, b});
    CHECK(handles(t.report_all(4)) == std::set<uint64_t>{a, c});
    CHECK(handles(t.report_all(1000000)) == std::set<uint64_t>{a});
    CHECK_THROWS_AS(t.insert(1, 5, 5), std::invalid_argument);
    CHECK_THROWS_AS(t.erase(12345), std::invalid_argument);
}

TEST_CASE("structural audit over growing instance") {
    std::mt19937_64 rng(5);
    Tree t;
    std::vector<uint64_t> live;
    for (int i = 0; i < 600; ++i) {
        const long long a = static_cast<long long>(rng() % 1000);
        const long long b = a + 1 + static_cast<long long>(rng() % 200);
        live.push_back(t.insert(rng() % 1000, a, b));
        if (i % 97 == 0) t.audit();
    }
    t.audit();
    // interleave deletions
    std::shuffle(live.begin(), live.end(), rng);
    for (int i = 0; i < 300; ++i) {
        t.erase(live.back());
        live.pop_back();
        if (i % 83 == 0) t.audit();
    }
    t.audit();
    CHECK(t.size() == live.size());
}

TEST_CASE("oracle equivalence randomized") {
    std::mt19937_64 rng(777);
    for (int seed = 0; seed < 6; ++seed) {
        Tree t;
        Timeline oracle;
        std::vector<uint64_t> live;

        const int ops = 1200;
        for (int op = 0; op < ops; ++op) {
            const int what = static_cast<int>(rng() % 10);
            if (what < 4 || live.empty()) {
                const uint64_t key = rng() % 500;
                const long long a = static_cast<long long>(rng() % 2000) - 1000;
                const long long b = (rng() % 8 == 0)
                                        ? kEndInfinity
                                        : a + 1 + static_cast<long long>(rng() % 500);
                const uint64_t h = t.insert(key, a, b);
                oracle.segs.push_back({key, a, b, h});
                live.push_back(h);
            } else if (what < 6) {
                const size_t i = rng() % live.size();
                t.erase(live[i]);
                auto& segs = oracle.segs;
                for (size_t k = 0; k < segs.size(); ++k)
                    if (segs[k].handle == live[i]) {
                        segs.erase(segs.begin() + static_cast<ptrdiff_t>(k));
                        break;
                    }
                live[i] = live.back();
                live.pop_back();
            } else if (what < 8) {
                const long long q = static_cast<long long>(rng() % 2400) - 1200;
                uint64_t y = rng() % 600, z = rng() % 600;
                if (y > z) std::swap(y, z);
                CHECK(handles(t.report_range(q, y, z)) == oracle.report(q, y, z));
            } else {
                const long long q = static_cast<long long>(rng() % 2400) - 1200;
                const uint64_t y = rng() % 600;
                const auto si = t.succ(q, y);
                const auto so = oracle.succ(q, y);
                CHECK(si.has_value() == so.has_value());
                if (si && so) CHECK(si->handle == *so);
                const auto pi = t.pred(q, y);
                const auto po = oracle.pred(q, y);
                CHECK(pi.has_value() == po.has_value());
                if (pi && po) CHECK(pi->handle == *po);
            }
        }
        t.audit();
    }
}

TEST_CASE("query node visits scale with log n") {
    std::mt19937_64 rng(2024);
    std::vector<double> means;
    for (const int n : {1 << 8, 1 << 10, 1 << 12}) {
        Tree t;
        for (int i = 0; i < n; ++i) {
            const long long a = static_cast<long long>(rng() % 100000);
            t.insert(rng(), a, a + 1 + static_cast<long long>(rng() % 10000));
        }
        t.reset_counter();
        const int q = 300;
        for (int i = 0; i < q; ++i) t.succ(static_cast<long long>(rng() % 110000), rng());
        means.push_back(static_cast<double>(t.nodes_visited()) / q);
    }
    // two doublings of log n: visits grow roughly linearly in log n
    CHECK(means[2] / means[0] <= 12.0 / 8.0 * 1.6);
}
