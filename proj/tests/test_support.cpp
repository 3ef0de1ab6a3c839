#include <doctest.h>

#include <cmath>
#include <sstream>

#include "test_helpers.hpp"

using namespace paygap;
using namespace testutil;

namespace {

std::vector<VariableBlock> one_block(const std::string& name, const std::string& col) {
    VariableBlock b;
    b.name = name;
    b.columns = {col};
    return {b};
}

// Two cells; cell B is focal-only. Hand values documented inline.
Dataset nopo_hand_dataset() {
    Dataset d = make_dataset({0, 0, 1, 1, 1, 1}, {2.0, 3.0, 2.5, 1.5, 1.0, 1.0});
    add_categorical(d, "c", {0, 0, 0, 0, 1, 1}, {"A", "B"});
    return d;
}

}  // namespace

TEST_CASE("support flags require positive weight from both groups") {
    Dataset d = nopo_hand_dataset();
    CellIndex cells = build_cells(d, one_block("blk", "c"));
    CHECK(cells.n_cells() == 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(cells.on_support[i] == 1);
    CHECK(cells.on_support[4] == 0);
    CHECK(cells.on_support[5] == 0);
}

TEST_CASE("nopo hand example: six rows, two cells") {
    Dataset d = nopo_hand_dataset();
    NopoResult r = nopo_decompose(d, build_cells(d, one_block("blk", "c")));
    // Raw gap: women mean (2.5+1.5+1+1)/4 = 1.5 vs men 2.5.
    CHECK(r.raw_gap == doctest::Approx(-1.0).epsilon(1e-12));
    // On-support: women {2.5, 1.5}, men {2.0, 3.0}.
    CHECK(r.gap_on_support == doctest::Approx(-0.5).epsilon(1e-12));
    // Exact matching inside the single mixed cell: same -0.5.
    CHECK(r.unexplained_on_support == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(r.explained_on_support == doctest::Approx(0.0));
    // Out-of-support focal: Pr(S=0|G=1)*(E[Y off]-E[Y on]) = .5*(1-2) = -.5.
    CHECK(r.out_of_support_focal == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(r.out_of_support_reference == 0.0);
    CHECK(r.focal_support_share == doctest::Approx(0.5));
    // The identity holds exactly.
    CHECK(r.raw_gap ==
          doctest::Approx(r.gap_on_support + r.out_of_support_focal -
                          r.out_of_support_reference)
              .epsilon(1e-12));
}

TEST_CASE("full support collapses the out-of-support components exactly") {
    Rng rng(7);
    Dataset d = random_cell_dataset(rng, 60, 3, 0.4);
    NopoResult r = nopo_decompose(d, build_cells(d, one_block("blk", "cell")));
    CHECK(r.out_of_support_focal == 0.0);
    CHECK(r.out_of_support_reference == 0.0);
    CHECK(r.gap_on_support == doctest::Approx(r.raw_gap).epsilon(1e-12));
    CHECK(r.raw_gap == doctest::Approx(raw_gap_of(d)).epsilon(1e-12));
}

TEST_CASE("nopo identity is algebraic: fifty random datasets") {
    Rng rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t n = 30 + rng.below(470);
        Dataset d;
        std::vector<int> c1, c2;
        for (std::size_t i = 0; i < n; ++i) {
            d.group.push_back(rng.uniform() < 0.45 ? 1 : 0);
            d.outcome.push_back(rng.normal() * 2.0);
            d.weight.push_back(0.1 + 2.0 * rng.uniform());
            c1.push_back(static_cast<int>(rng.below(4)));
            c2.push_back(static_cast<int>(rng.below(3)));
        }
        // Both groups must exist overall.
        d.group[0] = 1;
        d.group[1] = 0;
        add_categorical(d, "a", c1, {"a0", "a1", "a2", "a3"});
        add_categorical(d, "b", c2, {"b0", "b1", "b2"});
        VariableBlock ba, bb;
        ba.name = "A";
        ba.columns = {"a"};
        bb.name = "B";
        bb.columns = {"b"};
        NopoResult r = nopo_decompose(d, build_cells(d, {ba, bb}));
        if (!r.support_defined) continue;
        CHECK(std::abs(r.raw_gap - (r.gap_on_support + r.out_of_support_focal -
                                    r.out_of_support_reference)) < 1e-12);
        CHECK(std::abs(r.gap_on_support -
                       (r.unexplained_on_support + r.explained_on_support)) < 1e-12);
    }
}

TEST_CASE("adding a block never enlarges the on-support set; order irrelevant") {
    Rng rng(19);
    Dataset d;
    std::vector<int> c1, c2;
    for (std::size_t i = 0; i < 200; ++i) {
        d.group.push_back(rng.uniform() < 0.5 ? 1 : 0);
        d.outcome.push_back(rng.normal());
        d.weight.push_back(1.0);
        c1.push_back(static_cast<int>(rng.below(5)));
        c2.push_back(static_cast<int>(rng.below(5)));
    }
    add_categorical(d, "a", c1, {"0", "1", "2", "3", "4"});
    add_categorical(d, "b", c2, {"0", "1", "2", "3", "4"});
    VariableBlock ba, bb;
    ba.name = "A";
    ba.columns = {"a"};
    bb.name = "B";
    bb.columns = {"b"};
    CellIndex only_a = build_cells(d, {ba});
    CellIndex ab = build_cells(d, {ba, bb});
    CellIndex ba_order = build_cells(d, {bb, ba});
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (ab.on_support[i]) CHECK(only_a.on_support[i]);
        CHECK(ab.on_support[i] == ba_order.on_support[i]);
    }
}

TEST_CASE("single cell exact matching equals the raw gap") {
    Rng rng(29);
    Dataset d = make_dataset({1, 0, 1, 0, 1}, {1.0, 2.0, 3.0, 4.0, 5.0},
                             {1.0, 0.5, 2.0, 1.0, 0.7});
    add_categorical(d, "k", {0, 0, 0, 0, 0}, {"only", "other"});
    CellIndex cells = build_cells(d, one_block("blk", "k"));
    CHECK(exm_gap_on_support(d, cells) == doctest::Approx(raw_gap_of(d)).epsilon(1e-12));
}

TEST_CASE("sequential analysis reports shares and flags empty support") {
    // Identical covariate distributions: share 1 everywhere.
    Rng rng(31);
    Dataset d = random_cell_dataset(rng, 80, 2, 0.3);
    std::vector<int> c2;
    for (std::size_t i = 0; i < d.n_rows(); ++i) c2.push_back(static_cast<int>(i % 2));
    add_categorical(d, "z", c2, {"u", "v"});
    VariableBlock b1, b2;
    b1.name = "one";
    b1.columns = {"cell"};
    b2.name = "two";
    b2.columns = {"z"};
    SupportReport report = sequential_support_analysis(d, {b1, b2});
    REQUIRE(report.steps.size() == 2);
    CHECK(report.steps[0].nopo.focal_support_share == doctest::Approx(1.0));
    CHECK(report.steps[1].nopo.focal_support_share == doctest::Approx(1.0));

    // A focal-only level in the first block is off support from step one.
    Dataset e = nopo_hand_dataset();
    std::vector<int> all_same(e.n_rows(), 0);
    add_categorical(e, "z", all_same, {"u", "v"});
    VariableBlock eb1, eb2;
    eb1.name = "one";
    eb1.columns = {"c"};
    eb2.name = "two";
    eb2.columns = {"z"};
    SupportReport rep2 = sequential_support_analysis(e, {eb1, eb2});
    CHECK(rep2.steps[0].nopo.focal_support_share == doctest::Approx(0.5));
    CHECK(rep2.steps[1].nopo.focal_support_share == doctest::Approx(0.5));

    // No overlap at all: flagged undefined.
    Dataset f = make_dataset({1, 1, 0, 0}, {1, 2, 3, 4});
    add_categorical(f, "c", {0, 0, 1, 1}, {"w", "m"});
    SupportReport rep3 = sequential_support_analysis(f, one_block("blk", "c"));
    CHECK(rep3.steps[0].nopo.focal_support_share == 0.0);
    CHECK_FALSE(rep3.steps[0].nopo.support_defined);
    CHECK(std::isnan(rep3.steps[0].nopo.gap_on_support));
}

TEST_CASE("support report serializes to csv") {
    Rng rng(37);
    Dataset d = random_cell_dataset(rng, 50, 2, 0.3);
    VariableBlock b;
    b.name = "cells";
    b.columns = {"cell"};
    SupportReport report = sequential_support_analysis(d, {b});
    std::ostringstream csv;
    report.write_csv(csv);
    CHECK(csv.str().find("step,blocks,n_cells") == 0);
    CHECK(csv.str().find("cells") != std::string::npos);
}

TEST_CASE("block ranking: a single signal block ranks first") {
    Rng rng(41);
    Dataset d;
    std::vector<int> ca, cb;
    for (std::size_t i = 0; i < 600; ++i) {
        int a = static_cast<int>(rng.below(3)), b = static_cast<int>(rng.below(3));
        d.group.push_back(i % 4 == 0 ? 1 : 0);
        d.outcome.push_back(0.8 * a + 0.1 * rng.normal());
        d.weight.push_back(1.0);
        ca.push_back(a);
        cb.push_back(b);
    }
    add_categorical(d, "a", ca, {"0", "1", "2"});
    add_categorical(d, "b", cb, {"0", "1", "2"});
    VariableBlock ba, bb;
    ba.name = "nameA";
    ba.columns = {"a"};
    bb.name = "nameB";
    bb.columns = {"b"};
    ModelSpec spec{Regime::Baseline, {Term::dummy("a"), Term::dummy("b")}};
    auto ranks = rank_variable_blocks(d, {ba, bb}, spec);
    REQUIRE(ranks.size() == 2);
    CHECK(ranks[0].block == "nameA");
    CHECK(ranks[0].delta_r2 > 0.1);
    CHECK(std::abs(ranks[1].delta_r2) < 0.02);
}

TEST_CASE("block ranking: exact ties break alphabetically") {
    // Blocks whose columns do not appear in the model change nothing, so
    // their delta is exactly zero and the order is alphabetical.
    Rng rng(43);
    Dataset d;
    std::vector<int> ca, cb, cc;
    for (std::size_t i = 0; i < 100; ++i) {
        d.group.push_back(i % 3 == 0 ? 1 : 0);
        d.outcome.push_back(rng.normal());
        d.weight.push_back(1.0);
        ca.push_back(static_cast<int>(rng.below(2)));
        cb.push_back(static_cast<int>(rng.below(2)));
        cc.push_back(static_cast<int>(rng.below(2)));
    }
    add_categorical(d, "a", ca, {"0", "1"});
    add_categorical(d, "b", cb, {"0", "1"});
    add_categorical(d, "c", cc, {"0", "1"});
    VariableBlock bz, bm, ba;
    bz.name = "zeta";
    bz.columns = {"a"};
    bm.name = "mid";
    bm.columns = {"b"};
    ba.name = "alpha";
    ba.columns = {"c"};
    ModelSpec spec{Regime::Baseline, {}};  // none of the blocks enter the model
    auto ranks = rank_variable_blocks(d, {bz, bm, ba}, spec);
    CHECK(ranks[0].block == "alpha");
    CHECK(ranks[1].block == "mid");
    CHECK(ranks[2].block == "zeta");
    for (const auto& r : ranks) CHECK(r.delta_r2 == 0.0);
}

TEST_CASE("block ranking: duplicated content makes both blocks look idle") {
    Rng rng(47);
    Dataset d;
    std::vector<int> ca;
    for (std::size_t i = 0; i < 500; ++i) {
        int a = static_cast<int>(rng.below(3));
        d.group.push_back(i % 4 == 0 ? 1 : 0);
        d.outcome.push_back(0.7 * a + 0.1 * rng.normal());
        d.weight.push_back(1.0);
        ca.push_back(a);
    }
    add_categorical(d, "a", ca, {"0", "1", "2"});
    add_categorical(d, "a_dup", ca, {"0", "1", "2"});
    VariableBlock ba, bd;
    ba.name = "orig";
    ba.columns = {"a"};
    bd.name = "dup";
    bd.columns = {"a_dup"};
    ModelSpec spec{Regime::Baseline, {Term::dummy("a"), Term::dummy("a_dup")}};
    auto ranks = rank_variable_blocks(d, {ba, bd}, spec);
    for (const auto& r : ranks) CHECK(std::abs(r.delta_r2) < 0.01);
}

TEST_CASE("two-dataset ranking averages the deltas") {
    Rng rng(53);
    auto make = [&](double signal_a, double signal_b) {
        Dataset d;
        std::vector<int> ca, cb;
        for (std::size_t i = 0; i < 400; ++i) {
            int a = static_cast<int>(rng.below(3)), b = static_cast<int>(rng.below(3));
            d.group.push_back(i % 4 == 0 ? 1 : 0);
            d.outcome.push_back(signal_a * a + signal_b * b + 0.1 * rng.normal());
            d.weight.push_back(1.0);
            ca.push_back(a);
            cb.push_back(b);
        }
        add_categorical(d, "a", ca, {"0", "1", "2"});
        add_categorical(d, "b", cb, {"0", "1", "2"});
        return d;
    };
    Dataset d1 = make(0.9, 0.0), d2 = make(0.0, 0.4);
    VariableBlock ba, bb;
    ba.name = "A";
    ba.columns = {"a"};
    bb.name = "B";
    bb.columns = {"b"};
    ModelSpec spec{Regime::Baseline, {Term::dummy("a"), Term::dummy("b")}};
    auto ranks = rank_variable_blocks({&d1, &d2}, {ba, bb}, spec);
    // The strong signal in dataset 1 dominates the average.
    CHECK(ranks[0].block == "A");
    CHECK(ranks[0].delta_r2 > ranks[1].delta_r2);
}
