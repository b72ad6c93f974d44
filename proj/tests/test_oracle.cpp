#include <doctest.h>

#include "retro/oracle.hpp"

using namespace retro;
using oracle::NaiveTimeline;

TEST_CASE("timeline basics") {
    NaiveTimeline tl;
    CHECK(tl.alive_at(5).empty());
    tl.add(make_point({1}, 4), 2, 7, 1);
    tl.add(make_point({9}, 4), 5, NaiveTimeline::kInfinity, 2);
    CHECK(tl.alive_at(1).empty());
    CHECK(tl.alive_at(2).size() == 1);
    CHECK(tl.alive_at(6).size() == 2);
    CHECK(tl.alive_at(7).size() == 1);  // half-open interval
    CHECK(tl.alive_at(1000000).size() == 1);
    tl.remove(2);
    CHECK(tl.alive_at(6).size() == 1);
}

TEST_CASE("exact_nn on the intro instance") {
    // X = {1,4,7,10,13} scaled into [0,1) at w=4, each x alive from t=x on
    NaiveTimeline tl;
    uint64_t h = 0;
    for (uint32_t x : {1, 4, 7, 10, 13})
        tl.add(make_point({x}, 4), static_cast<long long>(x), NaiveTimeline::kInfinity, ++h);
    const auto nn = tl.exact_nn(make_point({6}, 4), 12);
    REQUIRE(nn.has_value());
    CHECK(nn->p == make_point({7}, 4));

    tl.add(make_point({6}, 4), 6, NaiveTimeline::kInfinity, ++h);
    const auto nn2 = tl.exact_nn(make_point({6}, 4), 12);
    REQUIRE(nn2.has_value());
    CHECK(nn2->p == make_point({6}, 4));
    CHECK(NaiveTimeline::sq_dist(nn2->p, make_point({6}, 4)) == 0);

    CHECK_FALSE(tl.exact_nn(make_point({6}, 4), 0).has_value());
}

TEST_CASE("exact_range with rational radius") {
    NaiveTimeline tl;
    tl.add(make_point({0, 0}, 8), 0, 10, 1);
    tl.add(make_point({30, 40}, 8), 0, 10, 2);  // distance 50
    tl.add(make_point({100, 0}, 8), 0, 10, 3);
    // r = 50 exactly: boundary point included
    auto in = tl.exact_range(make_point({0, 0}, 8), 2500, 1, 5);
    CHECK(in.size() == 2);
    // r = 49.99
    auto out = tl.exact_range(make_point({0, 0}, 8), 4999 * 4999, 10000, 5);
    CHECK(out.size() == 1);
    // dead at query time
    CHECK(tl.exact_range(make_point({0, 0}, 8), 2500, 1, 10).empty());
}
