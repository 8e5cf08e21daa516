#include <doctest.h>

#include <algorithm>
#include <set>

#include "swarmci/planner.hpp"

using namespace swarmci;

namespace {

// Independent oracle: enumerate lo*2^k <= hi, then apply the endpoint rule.
std::vector<int> oracle_log2(int lo, int hi) {
    std::vector<int> out;
    for (long long v = lo; v <= hi; v *= 2) out.push_back(static_cast<int>(v));
    if (out.back() != hi) out.push_back(hi);
    return out;
}

std::vector<int> oracle_linear(int lo, int hi, int step) {
    std::vector<int> out;
    for (long long v = lo; v <= hi; v += step) out.push_back(static_cast<int>(v));
    if (out.back() != hi) out.push_back(hi);
    return out;
}

ScalabilitySpec make_spec(AxisRange nodes, AxisRange ppn, ScaleMode mode,
                          int step = 1) {
    ScalabilitySpec s;
    s.script = "./run.sh";
    s.num_of_nodes = nodes;
    s.proc_per_node = ppn;
    s.mode = mode;
    s.step = step;
    return s;
}

}  // namespace

TEST_CASE("expand_axis log2 examples") {
    CHECK(expand_axis({1, 32}, ScaleMode::log2) == std::vector<int>{1, 2, 4, 8, 16, 32});
    CHECK(expand_axis({1, 16}, ScaleMode::log2) == std::vector<int>{1, 2, 4, 8, 16});
    CHECK(expand_axis({1, 10}, ScaleMode::log2) == std::vector<int>{1, 2, 4, 8, 10});
    CHECK(expand_axis({3, 3}, ScaleMode::linear, 1) == std::vector<int>{3});
}

TEST_CASE("expand_axis rejects bad ranges and steps") {
    CHECK_THROWS_AS(expand_axis({8, 2}, ScaleMode::linear, 1), RangeError);
    CHECK_THROWS_AS(expand_axis({0, 4}, ScaleMode::log2), RangeError);
    CHECK_THROWS_AS(expand_axis({-3, 4}, ScaleMode::linear, 1), RangeError);
    CHECK_THROWS_AS(expand_axis({1, 4}, ScaleMode::linear, 0), RangeError);
}

TEST_CASE("expand_axis matches the brute-force oracle for all hi <= 256") {
    for (int lo = 1; lo <= 256; ++lo) {
        for (int hi = lo; hi <= 256; ++hi) {
            auto got = expand_axis({lo, hi}, ScaleMode::log2);
            REQUIRE(got == oracle_log2(lo, hi));
            // endpoints present, strictly increasing, all within range
            REQUIRE(got.front() == lo);
            REQUIRE(got.back() == hi);
            for (std::size_t i = 1; i < got.size(); ++i)
                REQUIRE(got[i] > got[i - 1]);
        }
    }
    for (int step = 1; step <= 7; ++step)
        for (int lo = 1; lo <= 64; lo += 3)
            for (int hi = lo; hi <= 64; hi += 2)
                REQUIRE(expand_axis({lo, hi}, ScaleMode::linear, step) ==
                        oracle_linear(lo, hi, step));
}

TEST_CASE("log2 output is exactly the power ladder when hi is reachable") {
    for (int lo : {1, 2, 4, 8, 16}) {
        for (int hi = lo; hi <= 256; hi *= 2) {
            std::vector<int> ladder;
            for (long long v = lo; v <= hi; v *= 2)
                ladder.push_back(static_cast<int>(v));
            CHECK(expand_axis({lo, hi}, ScaleMode::log2) == ladder);
        }
    }
}

TEST_CASE("expand_matrix small product") {
    auto m = expand_matrix(make_spec({1, 2}, {1, 2}, ScaleMode::log2));
    REQUIRE(m.points.size() == 4);
    CHECK(m.points == std::vector<ScalePoint>{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
    CHECK(m.max_nodes == 2);
}

TEST_CASE("expand_matrix covers the 6x5 reference configuration") {
    auto m = expand_matrix(make_spec({1, 32}, {1, 16}, ScaleMode::log2));
    CHECK(m.points.size() == 30);
    CHECK(m.max_nodes == 32);

    // no duplicates, sorted by (total_procs, nodes)
    std::set<std::pair<int, int>> seen;
    for (const auto& p : m.points) seen.insert({p.nodes, p.procs_per_node});
    CHECK(seen.size() == 30);
    for (std::size_t i = 1; i < m.points.size(); ++i)
        CHECK(scale_point_less(m.points[i - 1], m.points[i]));
}

TEST_CASE("expand_matrix identity case") {
    auto m = expand_matrix(make_spec({1, 1}, {1, 1}, ScaleMode::linear));
    REQUIRE(m.points.size() == 1);
    CHECK(m.points[0] == ScalePoint{1, 1});
    CHECK(m.max_nodes == 1);
}

TEST_CASE("expand_matrix size equals the axis product") {
    auto spec = make_spec({1, 9}, {1, 5}, ScaleMode::linear, 2);
    auto m = expand_matrix(spec);
    auto a = expand_axis(spec.num_of_nodes, spec.mode, spec.step);
    auto b = expand_axis(spec.proc_per_node, spec.mode, spec.step);
    CHECK(m.points.size() == a.size() * b.size());
}

TEST_CASE("expand_matrix enforces the point cap") {
    auto spec = make_spec({1, 4096}, {1, 2}, ScaleMode::linear, 1);
    CHECK_THROWS_AS(expand_matrix(spec), MatrixTooLarge);
    CHECK_NOTHROW(expand_matrix(spec, 10000));
}

TEST_CASE("required_nodes") {
    auto m = expand_matrix(make_spec({1, 32}, {1, 16}, ScaleMode::log2));
    CHECK(required_nodes(m) == 32);

    auto single = expand_matrix(make_spec({1, 1}, {1, 1}, ScaleMode::linear));
    CHECK(required_nodes(single) == 1);

    RunMatrix hand;
    hand.points = {{2, 8}, {4, 4}};
    for (const auto& p : hand.points)
        hand.max_nodes = std::max(hand.max_nodes, p.nodes);
    CHECK(required_nodes(hand) == 4);

    CHECK_THROWS_AS(required_nodes(RunMatrix{}), EmptyMatrix);
}

TEST_CASE("point labels round-trip") {
    CHECK(point_label({4, 16}) == "4x16");
    CHECK(parse_point_label("4x16") == ScalePoint{4, 16});
    CHECK_THROWS_AS(parse_point_label("x16"), SchemaViolation);
    CHECK_THROWS_AS(parse_point_label("4x"), SchemaViolation);
    CHECK_THROWS_AS(parse_point_label("4x0"), SchemaViolation);
    CHECK_THROWS_AS(parse_point_label("ax2"), SchemaViolation);
}
