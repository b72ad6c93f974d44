#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "retro/oracle.hpp"
#include "retro/zorder.hpp"

using namespace retro;

namespace {

std::vector<Point> full_grid(uint8_t w) {
    std::vector<Point> pts;
    const uint32_t side = uint32_t{1} << w;
    for (uint32_t x = 0; x < side; ++x)
        for (uint32_t y = 0; y < side; ++y) pts.push_back(make_point({x, y}, w));
    return pts;
}

Point random_point(std::mt19937_64& rng, uint8_t d, uint8_t w) {
    Point p;
    p.dims = d;
    p.bits = w;
    for (int i = 0; i < d; ++i)
        p.coords[static_cast<size_t>(i)] =
            static_cast<uint32_t>(rng() & ((uint64_t{1} << w) - 1));
    return p;
}

double dist(const Point& a, const Point& b) {
    double s = 0;
    for (int i = 0; i < a.dims; ++i) {
        const double d = static_cast<double>(a.coords[static_cast<size_t>(i)]) -
                         static_cast<double>(b.coords[static_cast<size_t>(i)]);
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("shuffle examples") {
    CHECK(shuffle(make_point({0, 0}, 3)).low64() == 0);
    // x=0b101, y=0b011 interleaves to x3 y3 x2 y2 x1 y1 = 0b100111
    CHECK(shuffle(make_point({0b101, 0b011}, 3)).low64() == 39);
    // d=1: interleave of one list is the identity
    CHECK(shuffle(make_point({1234567}, 21)).low64() == 1234567);
}

TEST_CASE("msb_less") {
    CHECK(msb_less(1, 2));
    CHECK_FALSE(msb_less(5, 3));
    CHECK_FALSE(msb_less(2, 3));
    CHECK_FALSE(msb_less(0, 0));
    CHECK(msb_less(0, 1));
    CHECK_FALSE(msb_less(7, 0));
    CHECK_FALSE(msb_less(4, 7));
    CHECK(msb_less(3, 4));
}

TEST_CASE("z_less examples") {
    const Point p = make_point({2, 3}, 2);
    const Point q = make_point({3, 1}, 2);
    // sigma(p)=0b1101=13, sigma(q)=0b1011=11
    CHECK(shuffle(p).low64() == 13);
    CHECK(shuffle(q).low64() == 11);
    CHECK_FALSE(z_less(p, q));
    CHECK(z_less(q, p));
    CHECK_FALSE(z_less(p, p));
    CHECK(z_less(make_point({0, 0}, 3), make_point({1, 0}, 3)));
}

TEST_CASE("z_less agrees with shuffle exhaustively (d=2, w<=4)") {
    for (uint8_t w : {2, 3, 4}) {
        std::vector<Point> pts = full_grid(w);
        for (const Point& a : pts)
            for (const Point& b : pts)
                CHECK(z_less(a, b) == (shuffle(a) < shuffle(b)));
    }
}

TEST_CASE("z_less agrees with shuffle randomized (large d, w)") {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 20000; ++it) {
        const uint8_t d = static_cast<uint8_t>(1 + rng() % 8);
        Point a = random_point(rng, d, 31);
        Point b = random_point(rng, d, 31);
        if (rng() % 4 == 0) b = a;
        CHECK(z_less(a, b) == (shuffle(a) < shuffle(b)));
        // shifted copies compare consistently at width w+1
        const int j = static_cast<int>(rng() % (d + 1u));
        const Point sa = shift(a, j), sb = shift(b, j);
        CHECK(z_less(sa, sb) == (shuffle(sa, 32) < shuffle(sb, 32)));
    }
}

TEST_CASE("z_less is a strict weak order") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 5000; ++it) {
        const Point a = random_point(rng, 3, 10);
        const Point b = random_point(rng, 3, 10);
        const Point c = random_point(rng, 3, 10);
        CHECK_FALSE(z_less(a, a));
        const bool both = z_less(a, b) && z_less(b, a);
        CHECK_FALSE(both);
        if (z_less(a, b) && z_less(b, c)) CHECK(z_less(a, c));
    }
}

TEST_CASE("shift examples") {
    std::mt19937_64 rng(3);
    for (int it = 0; it < 100; ++it) {
        const Point p = random_point(rng, 4, 20);
        CHECK(shift(p, 0) == p);
    }
    CHECK(shift_offset(4, 2, 1) == 5);   // floor(16/3)
    CHECK(shift_offset(4, 2, 2) == 10);  // floor(32/3)
    const Point p = make_point({3, 9}, 4);
    CHECK(shift(p, 1) == make_point({8, 14}, 4));
}

TEST_CASE("cell_interval examples") {
    QuadCell root;
    root.anchor = make_point({0, 0}, 3);
    root.level = 0;
    auto [lo, hi] = cell_interval(root);
    CHECK(lo.low64() == 0);
    CHECK(hi.low64() == 63);

    QuadCell quad;
    quad.anchor = make_point({0b100, 0b000}, 3);
    quad.level = 1;
    auto [qlo, qhi] = cell_interval(quad);
    CHECK(qlo.low64() == 32);
    CHECK(qhi.low64() == 47);
    // cross-check by enumerating the full 8x8 grid
    for (const Point& p : full_grid(3)) {
        const bool inside = quad.contains(p);
        const uint64_t key = shuffle(p).low64();
        CHECK(inside == (key >= 32 && key <= 47));
    }

    const Point single = make_point({5, 2}, 3);
    auto [slo, shi] = cell_interval(point_cell(single));
    CHECK(slo == shuffle(single));
    CHECK(shi == shuffle(single));
}

TEST_CASE("c_constant") {
    CHECK(c_constant(1) == doctest::Approx(9.0));
    CHECK(c_constant(2) == doctest::Approx(17.9705627));
    CHECK(c_constant(2) > 15.0);
    CHECK(c_constant(4) == doctest::Approx(41.0));
}

TEST_CASE("cell contiguity exhaustive (d=2, w=3)") {
    std::vector<Point> pts = full_grid(3);
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return z_less(a, b); });
    // every cell of every level: members occupy one contiguous run
    for (int level = 0; level <= 3; ++level) {
        const uint32_t step = uint32_t{1} << (3 - level);
        for (uint32_t ax = 0; ax < 8; ax += step) {
            for (uint32_t ay = 0; ay < 8; ay += step) {
                QuadCell c;
                c.anchor = make_point({ax, ay}, 3);
                c.level = static_cast<uint8_t>(level);
                int first = -1, last = -1, count = 0;
                for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
                    if (c.contains(pts[static_cast<size_t>(i)])) {
                        if (first < 0) first = i;
                        last = i;
                        ++count;
                    }
                }
                REQUIRE(count > 0);
                CHECK(last - first + 1 == count);
            }
        }
    }
}

TEST_CASE("cell contiguity randomized (w=16)") {
    std::mt19937_64 rng(23);
    std::vector<Point> pts;
    for (int i = 0; i < 400; ++i) pts.push_back(random_point(rng, 2, 16));
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return z_less(a, b); });
    for (int it = 0; it < 300; ++it) {
        QuadCell c;
        c.level = static_cast<uint8_t>(rng() % 17);
        const Point a = random_point(rng, 2, 16);
        const int sh = 16 - c.level;
        c.anchor = make_point({(a[0] >> sh) << sh, (a[1] >> sh) << sh}, 16);
        int first = -1, last = -1, count = 0;
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
            if (c.contains(pts[static_cast<size_t>(i)])) {
                if (first < 0) first = i;
                last = i;
                ++count;
            }
        }
        if (count > 0) CHECK(last - first + 1 == count);
    }
}

TEST_CASE("shift candidate property") {
    // among the 2(d+1) z-order neighbors of q across the shifted lists there
    // is a point within c(d) times the true nearest-neighbor distance
    std::mt19937_64 rng(101);
    for (uint8_t d : {1, 2, 3}) {
        for (int trial = 0; trial < 300; ++trial) {
            const int n = 2 + static_cast<int>(rng() % 199);
            std::vector<Point> pts;
            for (int i = 0; i < n; ++i) pts.push_back(random_point(rng, d, 16));
            const Point q = random_point(rng, d, 16);

            double exact = 1e300;
            for (const Point& p : pts) exact = std::min(exact, dist(p, q));

            double best = 1e300;
            for (int j = 0; j <= d; ++j) {
                std::vector<Point> sorted = oracle::ref_z_sort(pts, j);
                const Point qs = shift(q, j);
                // first point whose shifted copy is >= qs
                int lo = static_cast<int>(sorted.size());
                for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
                    if (!z_less(shift(sorted[static_cast<size_t>(i)], j), qs)) {
                        lo = i;
                        break;
                    }
                }
                if (lo < static_cast<int>(sorted.size()))
                    best = std::min(best, dist(sorted[static_cast<size_t>(lo)], q));
                if (lo > 0) best = std::min(best, dist(sorted[static_cast<size_t>(lo - 1)], q));
            }
            CHECK(best <= c_constant(d) * exact + 1e-9);
        }
    }
}

TEST_CASE("centrality of some shifted copy") {
    // for each r = 2^-l some shift makes the point alpha-central in its
    // r-grid cell, alpha = 1/(2d+2), modulo one grid unit of quantization.
    // The spacing argument needs gcd(2^l, d+1) = 1, so this is guaranteed
    // only for even d; odd-d failure rates are recorded, not asserted.
    std::mt19937_64 rng(59);
    const uint8_t w = 20;
    for (uint8_t d : {1, 2, 3, 4}) {
        int trials = 0, failures = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const Point p = random_point(rng, d, w);
            for (int l = 1; l + 8 <= w; ++l) {
                const uint64_t cell = uint64_t{1} << (w - l);  // r in grid units
                const uint64_t a2 = 2u * d + 2u;
                bool ok = false;
                for (int j = 0; j <= d && !ok; ++j) {
                    const Point s = shift(p, j);
                    bool central = true;
                    for (int i = 0; i < d; ++i) {
                        const uint64_t m = s.coords[static_cast<size_t>(i)] % cell;
                        // alpha*cell <= m < (1-alpha)*cell, slack one unit
                        if ((m + 1) * a2 < cell || m * a2 >= cell * (a2 - 1) + a2) {
                            central = false;
                            break;
                        }
                    }
                    ok = central;
                }
                ++trials;
                if (!ok) {
                    ++failures;
                    if (d % 2 == 0) CHECK(ok);
                }
            }
        }
        if (d % 2 == 1)
            MESSAGE("centrality d=", int(d), ": ", failures, "/", trials,
                    " non-central (odd d, recorded)");
    }
}

TEST_CASE("ref_z_sort cross checks") {
    std::vector<Point> grid = full_grid(3);
    std::mt19937_64 rng(2);
    std::shuffle(grid.begin(), grid.end(), rng);
    const std::vector<Point> sorted = oracle::ref_z_sort(grid, 0);
    for (int i = 0; i < 64; ++i)
        CHECK(shuffle(sorted[static_cast<size_t>(i)]).low64() == static_cast<uint64_t>(i));

    // agreement with a z_less-based sort on random sets
    std::vector<Point> pts;
    for (int i = 0; i < 300; ++i) pts.push_back(random_point(rng, 3, 12));
    for (int j = 0; j <= 3; ++j) {
        std::vector<Point> a = oracle::ref_z_sort(pts, j);
        std::vector<Point> b = pts;
        std::stable_sort(b.begin(), b.end(), [&](const Point& x, const Point& y) {
            return z_less(shift(x, j), shift(y, j));
        });
        CHECK(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}
