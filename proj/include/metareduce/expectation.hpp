#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metareduce/common.hpp"

namespace metareduce {

// Expected average loss of an oracle-reduced pool: the mean of the k
// smallest mean errors.
double expected_oracle_average(std::span<const double> means, int k);

// Expected best (minimum) mean error over a uniform random k-subset,
// averaged over all C(P, k) subsets. Closed form over sorted means with
// exact combinatorial weights:
//   sum_i m_(i) * C(P-i, k-1) / C(P, k)   for i = 1 .. P-k+1.
double expected_random_optimal(std::span<const double> means, int k);

// Expected average loss of a uniform random k-subset. Independent of k and
// equal to the grand mean.
double expected_random_average(std::span<const double> means, int k);

struct StrategyExpectation {
    double average = 0.0;
    double optimal = 0.0;
};

// Mean and minimum of the pool members' mean errors. Closure-added members
// are excluded unless the caller folds them into `pool_means`.
StrategyExpectation strategy_expectations(std::span<const double> pool_means);

// Linear score anchored at the oracle (0) and random culling (1); values
// above 1 mean worse than random. Returns nullopt when the anchors coincide
// (|random - oracle| < 1e-12) -- an undefined score, not a fault.
std::optional<double> normalize(double value, double oracle_value, double random_value);

struct ExpectationRow {
    int k = 0;
    double oracle_average = 0.0;
    double oracle_optimal = 0.0;
    double random_average = 0.0;
    double random_optimal = 0.0;
    std::optional<double> leaderboard_average;
    std::optional<double> leaderboard_optimal;
    std::optional<double> landmarked_average;   // absent when landmarking is unsolvable
    std::optional<double> landmarked_optimal;
    std::optional<double> norm_leaderboard_average;
    std::optional<double> norm_leaderboard_optimal;
    std::optional<double> norm_landmarked_average;
    std::optional<double> norm_landmarked_optimal;
};

struct ExpectationReport {
    std::string base_id;
    std::string dataset_id;
    std::vector<ExpectationRow> rows;
};

}  // namespace metareduce
