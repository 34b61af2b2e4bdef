#include <cmath>
#include <random>

#include "doctest.h"

#include "metareduce/ranking.hpp"
#include "metareduce/synth.hpp"

using namespace metareduce;

namespace {

MetaKnowledgeBase base_from_means(
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>& cells,
    const std::optional<Roster>& roster = std::nullopt) {
    std::vector<EvaluationRecord> records;
    for (const auto& [dataset, row] : cells)
        for (const auto& [predictor, mean] : row) {
            EvaluationRecord r;
            r.base_id = "b";
            r.dataset_id = dataset;
            r.predictor_id = predictor;
            r.pipeline = {predictor};
            r.config_id = "c";
            r.fold_index = 0;
            r.error_rate = mean;
            r.eval_time_s = 1.0;
            records.push_back(std::move(r));
        }
    return MetaKnowledgeBase("b", Flavor::opportunistic, 10, std::move(records), roster);
}

}  // namespace

TEST_SUITE("ranking") {

TEST_CASE("tie-averaged ranks") {
    CHECK(rank_with_ties(std::vector<double>{0.1, 0.2, 0.2, 0.4}) ==
          std::vector<double>{1.0, 2.5, 2.5, 4.0});
    CHECK(rank_with_ties(std::vector<double>{0.5}) == std::vector<double>{1.0});
    CHECK(rank_with_ties(std::vector<double>{0.3, 0.3, 0.3}) ==
          std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("rank sums equal n(n+1)/2 for random inputs including full ties") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + rng() % 40;
        std::vector<double> values(n);
        for (auto& v : values) v = static_cast<double>(rng() % 8) / 8.0;  // many ties
        auto ranks = rank_with_ties(values);
        double sum = 0.0;
        for (double r : ranks) sum += r;
        CHECK(sum == doctest::Approx(n * (n + 1) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("ranks are invariant under strictly monotone transforms") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng() % 20;
        std::vector<double> values(n), transformed(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = static_cast<double>(rng() % 1000) / 1000.0;
            transformed[i] = std::exp(3.0 * values[i]) + 2.0;
        }
        CHECK(rank_with_ties(values) == rank_with_ties(transformed));
    }
}

TEST_CASE("build_ranking includes penalty cells and orders the leaderboard") {
    Roster roster;
    roster.predictors = {{"P0", ComponentKind::predictor, {}},
                         {"P1", ComponentKind::predictor, {}},
                         {"P2", ComponentKind::predictor, {}}};
    roster.datasets = {"d1"};
    auto base = base_from_means({{"d1", {{"P0", 0.2}, {"P1", 0.4}}}}, roster);
    auto table = build_ranking(base);
    CHECK(table.rank("d1", "P0") == 1.0);
    CHECK(table.rank("d1", "P1") == 2.0);
    CHECK(table.rank("d1", "P2") == 3.0);  // unevaluated, penalty 1.0
    CHECK(table.leaderboard_order() == std::vector<std::string>{"P0", "P1", "P2"});
}

TEST_CASE("reversed orders on two datasets tie and break lexicographically") {
    auto base = base_from_means({{"d1", {{"P0", 0.1}, {"P1", 0.2}}},
                                 {"d2", {{"P0", 0.2}, {"P1", 0.1}}}});
    auto table = build_ranking(base);
    CHECK(table.leaderboard()[0].average_rank == doctest::Approx(1.5));
    CHECK(table.leaderboard()[1].average_rank == doctest::Approx(1.5));
    CHECK(table.leaderboard_order() == std::vector<std::string>{"P0", "P1"});
}

TEST_CASE("bundled sample reproduces the planted leaderboard") {
    auto data = synth::make_sample_data();
    auto table = build_ranking(data.automl_base());
    std::vector<std::string> expected =
        data.manifest["automl"]["leaderboard"].get<std::vector<std::string>>();
    CHECK(table.leaderboard_order() == expected);
}

TEST_CASE("leaderboard excluding a dataset") {
    SUBCASE("two identical datasets keep the order") {
        auto base = base_from_means({{"d1", {{"P0", 0.1}, {"P1", 0.2}}},
                                     {"d2", {{"P0", 0.1}, {"P1", 0.2}}}});
        auto full = build_ranking(base).leaderboard_order();
        auto excl = leaderboard_excluding(base, "d1");
        std::vector<std::string> order;
        for (const auto& e : excl) order.push_back(e.predictor_id);
        CHECK(order == full);
    }
    SUBCASE("the planted adversarial dataset flips exactly one pair") {
        auto data = synth::make_sample_data();
        auto base = data.automl_base();
        auto excl = leaderboard_excluding(base, data.manifest["automl"]["flip"]["held_out"]);
        std::vector<std::string> order;
        for (const auto& e : excl) order.push_back(e.predictor_id);
        CHECK(order ==
              data.manifest["automl"]["leaderboard_excluding_d5"].get<std::vector<std::string>>());
    }
    SUBCASE("single-dataset bases and unknown datasets are errors") {
        auto base = base_from_means({{"d1", {{"P0", 0.1}, {"P1", 0.2}}}});
        CHECK_THROWS_AS(leaderboard_excluding(base, "d1"), std::invalid_argument);
        auto two = base_from_means({{"d1", {{"P0", 0.1}}}, {"d2", {{"P0", 0.1}}}});
        CHECK_THROWS_AS(leaderboard_excluding(two, "nope"), std::invalid_argument);
    }
}

TEST_CASE("leaderboard is invariant under per-dataset positive affine rescaling") {
    auto data = synth::make_sample_data();
    auto base = data.automl_base();
    std::vector<EvaluationRecord> rescaled = data.automl_records;
    std::map<std::string, std::pair<double, double>> affine = {
        {"d1", {0.5, 0.1}}, {"d2", {0.9, 0.02}}, {"d3", {0.3, 0.4}},
        {"d4", {1.0, 0.0}}, {"d5", {0.2, 0.05}}};
    for (auto& r : rescaled)
        if (r.error_rate) {
            auto [a, b] = affine.at(r.dataset_id);
            r.error_rate = a * *r.error_rate + b;
        }
    MetaKnowledgeBase other("automl", Flavor::opportunistic, 10, rescaled, data.roster);
    CHECK(build_ranking(other).leaderboard_order() ==
          build_ranking(base).leaderboard_order());
}

TEST_CASE("correlation modes") {
    std::vector<double> xs = {1, 2, 3, 4, 5};
    SUBCASE("identity correlates to 1") {
        CHECK(correlate(xs, xs, CorrelationMode::pearson) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(correlate(xs, xs, CorrelationMode::spearman) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("reversed ranks correlate to -1") {
        std::vector<double> ys = {5, 4, 3, 2, 1};
        CHECK(correlate(xs, ys, CorrelationMode::spearman) ==
              doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("affine transforms hit exactly +-1 in both modes") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> v(6);
            for (auto& x : v) x = static_cast<double>(rng() % 1000) / 999.0;
            v[0] += 1.0;  // ensure non-constant
            std::vector<double> up(v.size()), down(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                up[i] = 2.5 * v[i] + 1.0;
                down[i] = -0.5 * v[i] + 3.0;
            }
            for (auto mode : {CorrelationMode::pearson, CorrelationMode::spearman}) {
                CHECK(correlate(v, up, mode) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(correlate(v, down, mode) == doctest::Approx(-1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("the small permuted example matches the rank-difference formula") {
        // 1 - 6*sum d^2 / (n(n^2-1)) over distinct ranks, computed here as
        // the independent route.
        std::vector<double> ys = {2, 1, 4, 3, 5};
        double sum_d2 = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double d = xs[i] - ys[i];
            sum_d2 += d * d;
        }
        double expected = 1.0 - 6.0 * sum_d2 / (5.0 * (25.0 - 1.0));
        CHECK(expected == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(correlate(xs, ys, CorrelationMode::spearman) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("constant vectors have no defined correlation") {
        std::vector<double> flat = {2, 2, 2, 2, 2};
        CHECK_THROWS_AS(correlate(xs, flat, CorrelationMode::pearson), degenerate_input);
        CHECK_THROWS_AS(correlate(std::vector<double>{1.0}, std::vector<double>{2.0},
                                  CorrelationMode::pearson),
                        degenerate_input);
    }
}

TEST_CASE("cross-base correlations") {
    auto data = synth::make_sample_data();
    auto automl = data.automl_base();
    auto dflt = data.default_base();
    std::vector<std::string> all(automl.predictor_universe().begin(),
                                 automl.predictor_universe().end());

    SUBCASE("a base against itself is all ones") {
        auto report = cross_base_correlations(automl, automl, all);
        for (const auto& row : report.per_dataset) {
            CHECK(row.rank_corr.value() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(row.error_corr.value() == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(report.leaderboard_rank_corr.value() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("the planted anti-correlated dataset goes negative, the rest positive") {
        auto report = cross_base_correlations(automl, dflt, all);
        const std::string anti = data.manifest["default"]["anti_correlated_dataset"];
        for (const auto& row : report.per_dataset) {
            if (row.dataset_id == anti) {
                CHECK(row.rank_corr.value() < 0.0);
                CHECK(row.error_corr.value() < 0.0);
            } else {
                CHECK(row.rank_corr.value() > 0.0);
                CHECK(row.error_corr.value() > 0.0);
            }
        }
    }
    SUBCASE("a one-predictor subset is degenerate") {
        CHECK_THROWS_AS(cross_base_correlations(automl, dflt, {"P0"}), degenerate_input);
        CHECK_THROWS_AS(cross_base_correlations(automl, dflt, {}), std::invalid_argument);
    }
}

}  // TEST_SUITE

TEST_SUITE("ranking") {

TEST_CASE("the best-error key ranks on minima instead of means") {
    std::vector<EvaluationRecord> records;
    auto add = [&](const std::string& p, double err) {
        EvaluationRecord r;
        r.base_id = "b";
        r.dataset_id = "d1";
        r.predictor_id = p;
        r.pipeline = {p};
        r.config_id = "c" + std::to_string(records.size());
        r.fold_index = static_cast<int>(records.size() % 10);
        r.error_rate = err;
        r.eval_time_s = 1.0;
        records.push_back(std::move(r));
    };
    // A has the better mean, B the better single evaluation
    add("A", 0.30);
    add("A", 0.32);
    add("B", 0.10);
    add("B", 0.90);
    MetaKnowledgeBase base("b", Flavor::opportunistic, 10, records, std::nullopt);
    auto by_mean = build_ranking(base, {PipelineFilter::all, RankingKey::mean_error});
    auto by_best = build_ranking(base, {PipelineFilter::all, RankingKey::best_error});
    CHECK(by_mean.rank("d1", "A") == 1.0);
    CHECK(by_best.rank("d1", "B") == 1.0);
}

}  // TEST_SUITE

TEST_SUITE("ranking") {

TEST_CASE("cross-base correlations restricted to a predictor subset") {
    auto data = synth::make_sample_data();
    auto automl = data.automl_base();
    auto dflt = data.default_base();
    // drop the meta-predictor and the kernel from the comparison
    std::vector<std::string> subset = {"P0", "P1", "P2", "P3", "P4", "P6"};
    auto report = cross_base_correlations(automl, dflt, subset);
    const std::string anti = data.manifest["default"]["anti_correlated_dataset"];
    for (const auto& row : report.per_dataset) {
        if (row.dataset_id == anti)
            CHECK(row.rank_corr.value() < 0.0);
        else
            CHECK(row.rank_corr.value() > 0.0);
    }
    CHECK_THROWS_AS(cross_base_correlations(automl, dflt, {"P0", "ghost"}),
                    std::invalid_argument);
}

}  // TEST_SUITE
