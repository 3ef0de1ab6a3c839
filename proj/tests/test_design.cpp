#include <doctest.h>

#include "test_helpers.hpp"

using namespace paygap;
using namespace testutil;

namespace {

Dataset edu_occ_toy() {
    // Six rows covering a 3x4 categorical cross only partially.
    Dataset d = make_dataset({1, 0, 1, 0, 1, 0}, {0, 0, 0, 0, 0, 0});
    add_categorical(d, "edu", {0, 1, 2, 1, 2, 0}, {"A", "B", "C"});
    add_categorical(d, "occ", {0, 1, 2, 3, 1, 3}, {"P", "Q", "R", "S"});
    return d;
}

}  // namespace

TEST_CASE("dummy expansion drops the first declared level") {
    Dataset d = edu_occ_toy();
    ModelSpec spec{Regime::Baseline, {Term::dummy("edu")}};
    DesignMatrix X = build_design(d, spec);
    CHECK(X.cols() == 2);
    CHECK(X.names == std::vector<std::string>{"edu=B", "edu=C"});
    CHECK(X.values(0, 0) == 0.0);  // row 0 is the reference level A
    CHECK(X.values(1, 0) == 1.0);
}

TEST_CASE("polynomial emits linearly independent standardized powers") {
    Dataset d = make_dataset({1, 0, 1}, {0, 0, 0});
    add_continuous(d, "age", {20, 30, 40});
    ModelSpec spec{Regime::Baseline, {Term::poly("age", 2)}};
    DesignMatrix X = build_design(d, spec);
    REQUIRE(X.cols() == 2);
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(X.values).rank() == 2);
    // Standardization is weighted: mean 0, population sd 1.
    CHECK(X.values.col(0).sum() == doctest::Approx(0.0));
    CHECK(X.values.col(0).squaredNorm() / 3.0 == doctest::Approx(1.0));
}

TEST_CASE("interaction of two dummy expansions enumerated by hand") {
    Dataset d = edu_occ_toy();
    ModelSpec spec{Regime::Baseline,
                   {Term::interaction(Term::dummy("edu"), Term::dummy("occ"))}};
    DesignMatrix X = build_design(d, spec);

    // Hand enumeration: products of 1{edu=l} * 1{occ=m} for l in {B,C}, m in
    // {Q,R,S}; columns that are zero on every row are dropped.
    const auto& edu = d.covariate("edu").codes;
    const auto& occ = d.covariate("occ").codes;
    std::vector<std::string> expect_names;
    std::vector<std::vector<double>> expect_cols;
    for (int l = 1; l <= 2; ++l)
        for (int m = 1; m <= 3; ++m) {
            std::vector<double> col;
            bool any = false;
            for (std::size_t i = 0; i < d.n_rows(); ++i) {
                double v = (edu[i] == l && occ[i] == m) ? 1.0 : 0.0;
                any |= v != 0.0;
                col.push_back(v);
            }
            if (any) {
                expect_names.push_back(
                    std::string("edu=") + (l == 1 ? "B" : "C") + ":occ=" +
                    (m == 1 ? "Q" : m == 2 ? "R" : "S"));
                expect_cols.push_back(col);
            }
        }
    REQUIRE(X.names == expect_names);
    for (std::size_t j = 0; j < expect_cols.size(); ++j)
        for (std::size_t i = 0; i < d.n_rows(); ++i)
            CHECK(X.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  expect_cols[j][i]);
    CHECK(X.notices.size() == 6 - expect_cols.size());
}

TEST_CASE("build_design is deterministic") {
    Rng rng(3);
    Dataset d;
    std::vector<double> x;
    std::vector<int> c;
    for (int i = 0; i < 40; ++i) {
        d.group.push_back(i % 2);
        d.outcome.push_back(rng.normal());
        d.weight.push_back(0.5 + rng.uniform());
        x.push_back(rng.normal());
        c.push_back(static_cast<int>(rng.below(3)));
    }
    add_continuous(d, "x", x);
    add_categorical(d, "c", c, {"a", "b", "c"});
    ModelSpec spec{Regime::Full,
                   {Term::dummy("c"), Term::poly("x", 3),
                    Term::interaction(Term::dummy("c"), Term::poly("x", 2))}};
    DesignMatrix A = build_design(d, spec), B = build_design(d, spec);
    CHECK(A.names == B.names);
    CHECK(A.values == B.values);
}

TEST_CASE("baseline columns are a subset of full columns") {
    Dataset d = edu_occ_toy();
    ModelSpec base{Regime::Baseline, {Term::dummy("edu")}};
    ModelSpec full{Regime::Full,
                   {Term::dummy("edu"), Term::dummy("occ"),
                    Term::interaction(Term::dummy("edu"), Term::dummy("occ"))}};
    validate_nested_specs(base, full);
    DesignMatrix Xb = build_design(d, base), Xf = build_design(d, full);
    for (const auto& name : Xb.names) CHECK(Xf.column_index(name) >= 0);

    ModelSpec not_nested{Regime::Full, {Term::dummy("occ")}};
    CHECK_THROWS_AS(validate_nested_specs(base, not_nested), validation_error);
}

TEST_CASE("row permutation permutes design rows identically") {
    Rng rng(5);
    Dataset d;
    std::vector<double> x;
    for (int i = 0; i < 25; ++i) {
        d.group.push_back(i % 2);
        d.outcome.push_back(0.0);
        d.weight.push_back(0.5 + rng.uniform());
        x.push_back(rng.normal());
    }
    add_continuous(d, "x", x);
    ModelSpec spec{Regime::Baseline, {Term::poly("x", 3)}};
    DesignMatrix X = build_design(d, spec);
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < d.n_rows(); ++i) perm.push_back(d.n_rows() - 1 - i);
    DesignMatrix Xp = build_design(d.subset(perm), spec);
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        CHECK(Xp.values(static_cast<Eigen::Index>(i), 1) ==
              doctest::Approx(X.values(static_cast<Eigen::Index>(perm[i]), 1)).epsilon(1e-14));
}

TEST_CASE("constant and duplicate columns dropped with notices") {
    Dataset d = make_dataset({1, 0, 1, 0}, {0, 0, 0, 0});
    add_continuous(d, "ones", {2, 2, 2, 2});
    add_continuous(d, "x", {1, 2, 3, 4});
    add_continuous(d, "x_copy", {1, 2, 3, 4});
    ModelSpec spec{Regime::Baseline,
                   {Term::main("ones"), Term::main("x"), Term::main("x_copy")}};
    DesignMatrix X = build_design(d, spec);
    CHECK(X.names == std::vector<std::string>{"x"});
    REQUIRE(X.notices.size() == 2);
    CHECK(X.notices[0].find("constant") != std::string::npos);
    CHECK(X.notices[1].find("duplicate") != std::string::npos);
}

TEST_CASE("unknown column and empty matrix errors") {
    Dataset d = edu_occ_toy();
    CHECK_THROWS_AS(build_design(d, {Regime::Baseline, {Term::dummy("nope")}}),
                    validation_error);
    Dataset e = make_dataset({1, 0}, {0, 0});
    add_continuous(e, "k", {1, 1});
    CHECK_THROWS_WITH_AS(build_design(e, {Regime::Baseline, {Term::main("k")}}),
                         doctest::Contains("empty"), validation_error);
}

TEST_CASE("binning uses half-open intervals with the first bin as reference") {
    Dataset d = make_dataset({1, 0, 1, 0}, {0, 0, 0, 0});
    add_continuous(d, "t", {1.0, 2.0, 4.9, 5.0});
    DesignMatrix X = build_design(d, {Regime::Baseline, {Term::bins("t", {2.0, 5.0})}});
    CHECK(X.names == std::vector<std::string>{"t=[2,5)", "t=>=5"});
    CHECK(X.values(0, 0) == 0.0);
    CHECK(X.values(1, 0) == 1.0);  // 2.0 falls into [2,5)
    CHECK(X.values(2, 0) == 1.0);
    CHECK(X.values(3, 1) == 1.0);  // 5.0 falls into >=5
}

TEST_CASE("coarse term uses the block's level map") {
    Dataset d = edu_occ_toy();
    VariableBlock blk;
    blk.name = "occ2";
    blk.columns = {"occ"};
    blk.coarsening.level_map["occ"] = {{"P", "lo"}, {"Q", "lo"}, {"R", "hi"}, {"S", "hi"}};
    DesignMatrix X = build_design(d, {Regime::Baseline, {Term::coarse("occ2", "occ")}}, {blk});
    REQUIRE(X.cols() == 1);
    CHECK(X.names[0] == "occ~occ2=hi");
    // Rows with occ in {R,S} get 1.
    const auto& occ = d.covariate("occ").codes;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        CHECK(X.values(static_cast<Eigen::Index>(i), 0) == (occ[i] >= 2 ? 1.0 : 0.0));
}

TEST_CASE("builder freezes standardization from the fitting sample") {
    Dataset men = make_dataset({0, 0, 0, 1}, {0, 0, 0, 0});
    add_continuous(men, "x", {1.0, 2.0, 3.0, 2.0});
    Dataset fit_rows = men.subset({0, 1, 2});  // mean 2, sd sqrt(2/3)
    DesignBuilder builder({Regime::Baseline, {Term::poly("x", 1)}}, {});
    builder.fit(fit_rows);
    Dataset other = make_dataset({1, 1}, {0, 0});
    add_continuous(other, "x", {2.0, 5.0});
    DesignMatrix X = builder.transform(other);
    double sd = std::sqrt(2.0 / 3.0);
    CHECK(X.values(0, 0) == doctest::Approx(0.0));
    CHECK(X.values(1, 0) == doctest::Approx(3.0 / sd));
}

TEST_CASE("default cuts for age and tenure, explicit cuts otherwise") {
    Dataset d = make_dataset({1, 0, 1, 0}, {0, 0, 0, 0});
    add_continuous(d, "age", {25, 35, 45, 55});
    add_continuous(d, "other", {1, 2, 3, 4});
    Coarsening none;
    CoarseCodec age = coarsen_column(d, "age", none);
    CHECK(age.labels.size() == 4);  // decades 20-29 .. 50+
    CHECK(age.codes == std::vector<int>{0, 1, 2, 3});
    CHECK_THROWS_WITH_AS(coarsen_column(d, "other", none), doctest::Contains("cut-points"),
                         validation_error);
    Coarsening cuts;
    cuts.cuts["other"] = {2.5};
    CHECK(coarsen_column(d, "other", cuts).codes == std::vector<int>{0, 0, 1, 1});
}
