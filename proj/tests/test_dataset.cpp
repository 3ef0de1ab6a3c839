#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"

using namespace paygap;
using namespace testutil;

namespace {

const char* kSchema =
    "g = group\n"
    "y = outcome\n"
    "w = weight\n"
    "edu = covariate:categorical:A,B\n";

}  // namespace

TEST_CASE("csv round trip with declared schema") {
    Schema schema = Schema::parse(kSchema);
    Dataset d = parse_dataset_csv("g,y,w,edu\n1,1.5,1,A\n0,2.0,2,B\n1,0.5,1,A\n", schema);
    CHECK(d.n_rows() == 3);
    CHECK(d.group == std::vector<int>{1, 0, 1});
    CHECK(d.outcome[1] == doctest::Approx(2.0));
    CHECK(d.weight[1] == doctest::Approx(2.0));
    CHECK(d.covariate("edu").codes == std::vector<int>{0, 1, 0});
}

TEST_CASE("schema text round trip") {
    Schema schema = Schema::parse(kSchema);
    Schema again = Schema::parse(schema.to_string());
    CHECK(again.to_string() == schema.to_string());
    CHECK(again.group_column() == "g");
    CHECK(again.weight_column().value() == "w");
}

TEST_CASE("zero weight rejected with the offending row") {
    Schema schema = Schema::parse(kSchema);
    CHECK_THROWS_WITH_AS(
        parse_dataset_csv("g,y,w,edu\n1,1.5,1,A\n0,2.0,0,B\n1,0.5,1,A\n", schema),
        doctest::Contains("row 2"), validation_error);
}

TEST_CASE("undeclared categorical level names column and level") {
    Schema schema = Schema::parse(kSchema);
    try {
        parse_dataset_csv("g,y,w,edu\n1,1.5,1,A\n0,2.0,1,Z\n", schema);
        FAIL("expected error");
    } catch (const validation_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("edu") != std::string::npos);
        CHECK(msg.find("'Z'") != std::string::npos);
    }
}

TEST_CASE("missing mandatory column and non-binary group") {
    Schema schema = Schema::parse(kSchema);
    CHECK_THROWS_AS(parse_dataset_csv("g,w,edu\n1,1,A\n", schema), validation_error);
    CHECK_THROWS_WITH_AS(parse_dataset_csv("g,y,w,edu\n2,1.0,1,A\n", schema),
                         doctest::Contains("non-binary"), validation_error);
}

TEST_CASE("weight column optional, defaults to one") {
    Schema schema = Schema::parse("g = group\ny = outcome\nx = covariate:continuous\n");
    Dataset d = parse_dataset_csv("g,y,x\n1,1.0,2\n0,2.0,3\n", schema);
    CHECK(d.weight == std::vector<double>{1.0, 1.0});
}

TEST_CASE("dataset file round trip") {
    Schema schema = Schema::parse(kSchema);
    Dataset d = parse_dataset_csv("g,y,w,edu\n1,1.5,1,A\n0,2.0,2,B\n1,0.5,1.5,A\n", schema);
    std::string path = "/tmp/paygap_test_roundtrip.csv";
    write_dataset_csv(d, schema, path);
    Dataset d2 = load_dataset(path, schema);
    CHECK(d2.n_rows() == d.n_rows());
    CHECK(d2.outcome == d.outcome);
    CHECK(d2.weight == d.weight);
    CHECK(d2.covariate("edu").codes == d.covariate("edu").codes);
}

TEST_CASE("standardized difference: identical distributions give zero") {
    Dataset d = make_dataset({1, 1, 0, 0}, {0, 0, 0, 0});
    add_continuous(d, "x", {1.0, 2.0, 1.0, 2.0});
    auto out = standardized_difference(d, "x");
    CHECK(out.size() == 1);
    CHECK(out[0].value == doctest::Approx(0.0));
}

TEST_CASE("standardized difference: full-time shares from the balance table") {
    // Bernoulli shares .406 (focal) and .850 (reference); the exact value is
    // 100*|.406-.850|/sqrt((.406*.594+.850*.150)/2) = 103.415...
    std::size_t n1 = 1000, n0 = 1000;
    Dataset d;
    std::vector<int> codes;
    for (std::size_t i = 0; i < n1; ++i) {
        d.group.push_back(1);
        d.outcome.push_back(0);
        d.weight.push_back(1);
        codes.push_back(i < 406 ? 1 : 0);
    }
    for (std::size_t i = 0; i < n0; ++i) {
        d.group.push_back(0);
        d.outcome.push_back(0);
        d.weight.push_back(1);
        codes.push_back(i < 850 ? 1 : 0);
    }
    add_categorical(d, "fulltime", codes, {"no", "yes"});
    auto out = standardized_difference(d, "fulltime");
    REQUIRE(out.size() == 2);
    double expected = 100.0 * std::abs(0.406 - 0.850) /
                      std::sqrt((0.406 * 0.594 + 0.850 * 0.150) / 2.0);
    CHECK(out[1].label == "fulltime=yes");
    CHECK(out[1].value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(out[1].value - 103.4) < 0.1);
}

TEST_CASE("standardized difference: hand value with equal variances") {
    // Means 1 and 2, both population variances 0.5: two-point supports.
    double s = std::sqrt(0.5);
    Dataset d = make_dataset({1, 1, 0, 0}, {0, 0, 0, 0});
    add_continuous(d, "x", {1.0 - s, 1.0 + s, 2.0 - s, 2.0 + s});
    auto out = standardized_difference(d, "x");
    CHECK(out[0].value == doctest::Approx(100.0 / s).epsilon(1e-12));
    CHECK(out[0].value == doctest::Approx(141.4214).epsilon(1e-4));
}

TEST_CASE("standardized difference: invariant to weight rescaling") {
    Rng rng(11);
    Dataset d;
    std::vector<double> x;
    for (int i = 0; i < 60; ++i) {
        d.group.push_back(i % 2);
        d.outcome.push_back(0);
        d.weight.push_back(0.2 + rng.uniform());
        x.push_back(rng.normal() + (i % 2 ? 0.3 : 0.0));
    }
    add_continuous(d, "x", x);
    double v1 = standardized_difference(d, "x")[0].value;
    for (auto& w : d.weight) w *= 37.5;
    double v2 = standardized_difference(d, "x")[0].value;
    CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
}

TEST_CASE("standardized difference: degenerate scale") {
    Dataset d = make_dataset({1, 1, 0, 0}, {0, 0, 0, 0});
    add_continuous(d, "x", {1.0, 1.0, 2.0, 2.0});
    CHECK_THROWS_WITH_AS(standardized_difference(d, "x"), doctest::Contains("degenerate"),
                         validation_error);
    // Equal constant in both groups is defined as zero.
    Dataset e = make_dataset({1, 1, 0, 0}, {0, 0, 0, 0});
    add_continuous(e, "x", {3.0, 3.0, 3.0, 3.0});
    CHECK(standardized_difference(e, "x")[0].value == 0.0);
}

TEST_CASE("dataset validation catches structural problems") {
    Dataset d = make_dataset({1, 1}, {0.0, 1.0});
    CHECK_THROWS_AS(d.validate(), validation_error);  // single group
    Dataset e = make_dataset({1, 0}, {0.0, 1.0}, {1.0, -2.0});
    CHECK_THROWS_AS(e.validate(), validation_error);  // negative weight
}

TEST_CASE("subset preserves alignment and repeats rows") {
    Dataset d = make_dataset({1, 0, 1}, {1.0, 2.0, 3.0}, {1, 2, 3});
    add_continuous(d, "x", {10, 20, 30});
    Dataset s = d.subset({2, 0, 2});
    CHECK(s.outcome == std::vector<double>{3.0, 1.0, 3.0});
    CHECK(s.covariate("x").values == std::vector<double>{30, 10, 30});
}
