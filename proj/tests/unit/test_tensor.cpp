#include <algorithm>
#include <map>
#include <numeric>

#include "doctest.h"

#include "aesad/rng.hpp"
#include "aesad/tensor.hpp"

using namespace aesad;

TEST_CASE("Tensor shape and row access") {
    Tensor t{{1, 2, 3}, {4, 5, 6}};
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t(1, 2) == 6);
    CHECK(t.row(1)[0] == 4);
    CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS((Tensor{{1, 2}, {3}}), std::invalid_argument);
}

TEST_CASE("Tensor select_rows and append_rows") {
    const Tensor t{{1, 2}, {3, 4}, {5, 6}};
    const std::vector<std::size_t> idx{2, 0};
    const Tensor s = t.select_rows(idx);
    CHECK(s == Tensor{{5, 6}, {1, 2}});
    Tensor a;
    a.append_rows(s);
    a.append_rows(t);
    CHECK(a.rows() == 5);
    CHECK(a(4, 1) == 6);
    CHECK_THROWS_AS(a.append_rows(Tensor(1, 3)), std::invalid_argument);
    const std::vector<std::size_t> bad{3};
    CHECK_THROWS_AS(t.select_rows(bad), std::out_of_range);
}

TEST_CASE("Tensor all_finite") {
    Tensor t(2, 2, 1.0);
    CHECK(t.all_finite());
    t(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("SplitMix64 reference sequence") {
    // Published first outputs for seed 1234567.
    SplitMix64 g(1234567);
    CHECK(g.next() == 6457827717110365317ULL);
    CHECK(g.next() == 3203168211198807973ULL);
    CHECK(g.next() == 9817491932198370423ULL);
}

TEST_CASE("SplitMix64 uniform and below stay in range") {
    SplitMix64 g(3);
    std::map<std::uint64_t, int> counts;
    for (int i = 0; i < 10000; ++i) {
        const double u = g.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        ++counts[g.below(5)];
    }
    CHECK(counts.size() == 5);
    for (const auto& [k, c] : counts) CHECK(c > 1700);
}

TEST_CASE("sample_without_replacement draws distinct indices") {
    SplitMix64 g(8);
    auto s = sample_without_replacement(50, 20, g);
    CHECK(s.size() == 20);
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 50);
    CHECK_THROWS_AS(sample_without_replacement(3, 4, g), std::invalid_argument);
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> a(30), b(30);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    SplitMix64 g1(5), g2(5);
    shuffle(std::span<int>(a), g1);
    shuffle(std::span<int>(b), g2);
    CHECK(a == b);
    std::sort(a.begin(), a.end());
    for (int i = 0; i < 30; ++i) CHECK(a[i] == i);
}
