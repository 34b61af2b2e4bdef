#include "metareduce/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metareduce {

namespace {

using u128 = unsigned __int128;

u128 binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    u128 result = 1;
    for (int i = 1; i <= k; ++i) {
        u128 factor = static_cast<u128>(n - k + i);
        if (result > (~static_cast<u128>(0)) / factor)
            throw std::overflow_error("binomial coefficient exceeds 2^128");
        result = result * factor / static_cast<u128>(i);
    }
    return result;
}

void check_k(std::span<const double> means, int k) {
    if (means.empty()) throw std::invalid_argument("empty mean vector");
    if (k < 1 || k > static_cast<int>(means.size()))
        throw std::invalid_argument("k outside [1, P]");
}

}  // namespace

double expected_oracle_average(std::span<const double> means, int k) {
    check_k(means, k);
    std::vector<double> sorted(means.begin(), means.end());
    std::stable_sort(sorted.begin(), sorted.end());
    long double sum = 0.0L;
    for (int i = 0; i < k; ++i) sum += sorted[i];
    return static_cast<double>(sum / k);
}

double expected_random_optimal(std::span<const double> means, int k) {
    check_k(means, k);
    const int p = static_cast<int>(means.size());
    std::vector<double> sorted(means.begin(), means.end());
    std::stable_sort(sorted.begin(), sorted.end());

    // m_(i) is the subset minimum exactly when the other k-1 members come
    // from the P-i values above it: C(P-i, k-1) of C(P, k) subsets.
    const u128 total = binom(p, k);
    long double sum = 0.0L;
    for (int i = 1; i <= p - k + 1; ++i) {
        u128 weight = binom(p - i, k - 1);
        sum += static_cast<long double>(sorted[i - 1]) * static_cast<long double>(weight);
    }
    return static_cast<double>(sum / static_cast<long double>(total));
}

double expected_random_average(std::span<const double> means, int k) {
    check_k(means, k);
    long double sum = std::accumulate(means.begin(), means.end(), 0.0L);
    return static_cast<double>(sum / static_cast<long double>(means.size()));
}

StrategyExpectation strategy_expectations(std::span<const double> pool_means) {
    if (pool_means.empty()) throw std::invalid_argument("strategy_expectations: empty pool");
    StrategyExpectation e;
    long double sum = 0.0L;
    double lo = pool_means[0];
    for (double v : pool_means) {
        sum += v;
        lo = std::min(lo, v);
    }
    e.average = static_cast<double>(sum / static_cast<long double>(pool_means.size()));
    e.optimal = lo;
    return e;
}

std::optional<double> normalize(double value, double oracle_value, double random_value) {
    if (std::fabs(random_value - oracle_value) < 1e-12) return std::nullopt;
    return (value - oracle_value) / (random_value - oracle_value);
}

}  // namespace metareduce
