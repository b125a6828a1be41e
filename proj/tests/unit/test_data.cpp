#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"

#include "aesad/data.hpp"
#include "aesad/rng.hpp"

using namespace aesad;

namespace {

std::string be32(std::uint32_t v) {
    std::string s(4, '\0');
    s[0] = static_cast<char>((v >> 24) & 0xff);
    s[1] = static_cast<char>((v >> 16) & 0xff);
    s[2] = static_cast<char>((v >> 8) & 0xff);
    s[3] = static_cast<char>(v & 0xff);
    return s;
}

// n images of 2x3 pixels, pixel value (i * 6 + p) * 10 capped at 255.
std::pair<std::string, std::string> make_idx(std::uint32_t n) {
    std::string images = be32(0x803) + be32(n) + be32(2) + be32(3);
    std::string labels = be32(0x801) + be32(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (int p = 0; p < 6; ++p) images.push_back(static_cast<char>(std::min<std::uint32_t>(255, (i * 6 + p) * 10)));
        labels.push_back(static_cast<char>(i % 10));
    }
    return {images, labels};
}

// `per_class` rows for each class 0..k-1, features encode (class, index).
Dataset class_pool(int k, std::size_t per_class) {
    Dataset d;
    d.name = "pool";
    d.features = Tensor(static_cast<std::size_t>(k) * per_class, 2);
    for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t r = static_cast<std::size_t>(c) * per_class + i;
            d.features(r, 0) = c / 10.0;
            d.features(r, 1) = static_cast<double>(i) / static_cast<double>(per_class);
            d.labels.push_back(0);
            d.class_ids.push_back(c);
        }
    }
    return d;
}

Dataset labeled(std::size_t normals, std::size_t anomalies) {
    Dataset d;
    d.features = Tensor(normals + anomalies, 1);
    for (std::size_t r = 0; r < normals + anomalies; ++r) {
        d.features(r, 0) = static_cast<double>(r);
        d.labels.push_back(r < normals ? 0 : 1);
    }
    return d;
}

}  // namespace

TEST_CASE("parse_csv reads features and labels in file order") {
    std::istringstream in("a,b,label\n0.5,2,0\n1,3,1\n-2,4.5,0\n");
    const Dataset d = parse_csv(in, "label");
    CHECK(d.size() == 3);
    CHECK(d.dim() == 2);
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    CHECK(d.features(2, 0) == -2.0);
    CHECK_FALSE(d.has_class_ids());
}

TEST_CASE("parse_csv with a class column") {
    std::istringstream in("class,x,label\n3,0.1,0\n7,0.2,1\n");
    const Dataset d = parse_csv(in, "label", std::string_view("class"));
    CHECK(d.dim() == 1);
    CHECK(d.class_ids == std::vector<int>{3, 7});
}

TEST_CASE("parse_csv errors") {
    std::istringstream bad_label("a,label\n1,2\n");
    CHECK_THROWS_AS(parse_csv(bad_label, "label"), std::runtime_error);
    std::istringstream missing("a,b\n1,2\n");
    CHECK_THROWS_AS(parse_csv(missing, "label"), std::runtime_error);
    std::istringstream non_numeric("a,label\nx,0\n");
    CHECK_THROWS_AS(parse_csv(non_numeric, "label"), std::runtime_error);
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_csv(empty, "label"), std::runtime_error);
    std::istringstream header_only("a,label\n");
    CHECK_THROWS_AS(parse_csv(header_only, "label"), std::runtime_error);
    std::istringstream ragged("a,label\n1\n");
    CHECK_THROWS_AS(parse_csv(ragged, "label"), std::runtime_error);
}

TEST_CASE("parse_idx scales pixels and keeps class ids") {
    auto [images, labels] = make_idx(12);
    std::istringstream ii(images), li(labels);
    const Dataset d = parse_idx(ii, li);
    CHECK(d.size() == 12);
    CHECK(d.dim() == 6);
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(0, 1) == doctest::Approx(10.0 / 255.0));
    CHECK(d.features(11, 5) == 1.0);  // 710 capped at 255
    CHECK(d.class_ids[11] == 1);
    CHECK(d.count_label(0) == 12);
}

TEST_CASE("parse_idx errors") {
    auto [images, labels] = make_idx(4);
    {
        std::string bad = images;
        bad[3] = 0x04;
        std::istringstream ii(bad), li(labels);
        CHECK_THROWS_WITH_AS(parse_idx(ii, li), doctest::Contains("magic"), std::runtime_error);
    }
    {
        std::istringstream ii(images.substr(0, images.size() - 3)), li(labels);
        CHECK_THROWS_WITH_AS(parse_idx(ii, li), doctest::Contains("truncated"), std::runtime_error);
    }
    {
        auto [img5, lab5] = make_idx(5);
        std::istringstream ii(img5), li(labels);
        CHECK_THROWS_AS(parse_idx(ii, li), std::runtime_error);
    }
}

TEST_CASE("normalize_minmax") {
    Dataset d;
    d.features = Tensor{{2, 5, 0}, {4, 5, 1}, {6, 5, 2}};
    d.labels = {0, 0, 0};
    const std::vector<std::size_t> rows{0, 1, 2};
    const auto res = normalize_minmax(d, rows);
    CHECK(res.data.features == Tensor{{0, 0.5, 0}, {0.5, 0.5, 0.5}, {1, 0.5, 1}});

    const Tensor unseen{{8, 1, -1}};
    const Tensor t = res.scaler.transform(unseen);
    CHECK(t(0, 0) == 1.0);
    CHECK(t(0, 1) == 0.5);
    CHECK(t(0, 2) == 0.0);
    CHECK_THROWS_AS(fit_minmax(d.features, std::vector<std::size_t>{}), std::invalid_argument);
}

TEST_CASE("normalization fitted on a subset keeps those rows inside [0,1]") {
    SplitMix64 rng(1);
    Dataset d;
    d.features = Tensor(50, 4);
    for (double& v : d.features.values()) v = rng.normal() * 10.0;
    d.labels.assign(50, 0);
    std::vector<std::size_t> fit(25);
    for (std::size_t i = 0; i < 25; ++i) fit[i] = 2 * i;
    const auto res = normalize_minmax(d, fit);
    for (std::size_t r : fit) {
        for (double v : res.data.features.row(r)) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK_NOTHROW(res.data.validate_unit_range());
}

TEST_CASE("build_split: normal rows plus s seeded anomalies, test relabeled") {
    const Dataset train_pool = class_pool(10, 30);
    const Dataset test_pool = class_pool(10, 5);
    SplitSpec spec;
    spec.protocol = Protocol::one_vs_many;
    spec.normal_classes = {8};
    spec.seen_anomaly_classes = {1, 3, 5, 9};
    spec.s = 100;
    spec.seed = 4;
    const Split split = build_split(train_pool, test_pool, spec);
    CHECK(split.train.size() == 130);
    CHECK(split.train.count_label(0) == 30);
    CHECK(split.train.count_label(1) == 100);
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        const int c = split.train.class_ids[i];
        if (split.train.labels[i] == 0) CHECK(c == 8);
        else CHECK((c == 1 || c == 3 || c == 5 || c == 9));
    }
    CHECK(split.unused_anomaly_rows.size() == 20);
    CHECK(split.test.size() == test_pool.size());
    for (std::size_t r = 0; r < split.test.size(); ++r) CHECK(split.test.labels[r] == (split.test.class_ids[r] == 8 ? 0 : 1));

    const Split again = build_split(train_pool, test_pool, spec);
    CHECK(again.train_rows == split.train_rows);
    spec.seed = 5;
    CHECK(build_split(train_pool, test_pool, spec).train_rows != split.train_rows);
}

TEST_CASE("build_split with s = 0 is one-class") {
    const Dataset pool = class_pool(3, 10);
    SplitSpec spec{Protocol::one_vs_one, {0}, {1}, 0, std::nullopt, 1};
    const Split split = build_split(pool, pool, spec);
    CHECK(split.train.size() == 10);
    CHECK(split.train.count_label(1) == 0);
}

TEST_CASE("build_split per-class quota") {
    const Dataset pool = class_pool(10, 30);
    SplitSpec spec;
    spec.protocol = Protocol::one_vs_all;
    spec.normal_classes = {2};
    spec.per_class_quota = 2;
    const Split split = build_split(pool, pool, spec);
    CHECK(split.train.count_label(1) == 18);
    std::map<int, int> per_class;
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        if (split.train.labels[i] == 1) ++per_class[split.train.class_ids[i]];
    }
    CHECK(per_class.size() == 9);
    for (const auto& [c, n] : per_class) CHECK(n == 2);
}

TEST_CASE("build_split validation") {
    const Dataset pool = class_pool(5, 10);
    CHECK_THROWS_AS(build_split(pool, pool, SplitSpec{Protocol::one_vs_one, {1}, {2}, 11, std::nullopt, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_split(pool, pool, SplitSpec{Protocol::one_vs_one, {1}, {1}, 1, std::nullopt, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_split(pool, pool, SplitSpec{Protocol::one_vs_one, {1}, {2, 3}, 1, std::nullopt, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_split(pool, pool, SplitSpec{Protocol::many_vs_many, {1}, {2}, 1, std::nullopt, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_split(pool, pool, SplitSpec{Protocol::one_vs_one, {1}, {7}, 1, std::nullopt, 0}),
                    std::invalid_argument);
    CHECK_NOTHROW(build_split(pool, pool, SplitSpec{Protocol::many_vs_many, {0, 1}, {2, 3}, 5, std::nullopt, 0}));
}

TEST_CASE("build_odds_split: 60% of normals and anomalies at most 5% of train") {
    const Dataset d = labeled(1000, 100);
    const Split split = build_odds_split(d, 3);
    CHECK(split.train.count_label(0) == 600);
    CHECK(split.train.count_label(1) == 31);
    CHECK(split.test.count_label(0) == 400);
    CHECK(split.test.count_label(1) == 69);

    std::set<std::size_t> train(split.train_rows.begin(), split.train_rows.end());
    for (std::size_t r : split.test_rows) CHECK_FALSE(train.count(r));
    CHECK(train.size() + split.test_rows.size() == d.size());

    CHECK(build_odds_split(d, 3).train_rows == split.train_rows);
    CHECK(build_odds_split(d, 4).train_rows != split.train_rows);
    CHECK_THROWS_AS(build_odds_split(labeled(10, 0), 1), std::invalid_argument);
}

TEST_CASE("build_odds_split caps anomalies at what is available") {
    const Split split = build_odds_split(labeled(1000, 10), 1);
    CHECK(split.train.count_label(1) == 10);
    CHECK(split.test.count_label(1) == 0);
}

TEST_CASE("inject_pollution adds round(rate * inliers) rows labeled 0") {
    const Dataset train = labeled(1000, 8);
    Dataset pool = labeled(0, 200);
    const auto res = inject_pollution(train, pool, PollutionSpec{0.05, 1, std::nullopt});
    CHECK(res.train.size() == 1058);
    CHECK(res.train.count_label(0) == 1050);
    CHECK(res.injected_rows.size() == 50);
    for (std::size_t r = 0; r < train.size(); ++r) CHECK(res.train.features(r, 0) == train.features(r, 0));

    CHECK(inject_pollution(train, pool, PollutionSpec{0.0, 1, std::nullopt}).train.size() == train.size());
    CHECK_THROWS_AS(inject_pollution(train, pool, PollutionSpec{0.25, 1, std::nullopt}), std::invalid_argument);
}

TEST_CASE("one-vs-all polluted variant reaches about 15% pollution") {
    const Dataset pool = class_pool(10, 700);
    SplitSpec spec;
    spec.protocol = Protocol::one_vs_all;
    spec.normal_classes = {0};
    spec.per_class_quota = 2;
    const Split split = build_split(pool, pool, spec);
    const Dataset anomaly_pool = pool.subset(split.unused_anomaly_rows);
    const auto res = inject_pollution(split.train, anomaly_pool, PollutionSpec{0.0, 2, 100});
    CHECK(res.injected_rows.size() == 900);
    CHECK(res.train.count_label(1) == 18);
    const double rate = 900.0 / 700.0;  // 9 classes x 100 over 700 inliers in this toy pool
    CHECK(static_cast<double>(res.injected_rows.size()) / static_cast<double>(split.train.count_label(0)) == rate);
    // With MNIST-sized classes (~6000 inliers) the same rule gives 900 / 6000 = 15%.
}

TEST_CASE("split manifest and hash are stable") {
    const Dataset pool = class_pool(4, 10);
    const SplitSpec spec{Protocol::one_vs_one, {0}, {1}, 3, std::nullopt, 9};
    const Split a = build_split(pool, pool, spec);
    const Split b = build_split(pool, pool, spec);
    const std::string m = split_manifest(a);
    CHECK(m == split_manifest(b));
    CHECK(m.find("train_normal 10:") != std::string::npos);
    CHECK(m.find("train_anomaly 3:") != std::string::npos);
    CHECK(fnv1a_hex(m).size() == 16);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
