#pragma once

// Test-only oracles, coded independently of the library implementations they
// check: direct quadrature for the t and studentized-range distributions and
// exhaustive subset enumeration for the combinatorial expectations. Nothing
// here may call into the code paths under test.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace oracles {

// Two-sided Student-t tail probability P(|T_df| >= |t|) by adaptive Simpson
// quadrature of the density.
double t_two_sided_p(double t, double df);

// Welch p-value recomputed from scratch (two-pass moments + t quadrature).
double welch_p(std::span<const double> a, std::span<const double> b);

// Upper-alpha quantile of the range of k standard normals divided by
// sqrt(2), via Gauss-Legendre panels and Brent inversion.
double nemenyi_q(int k, double alpha);

// Visits every k-subset of {0..n-1}.
void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn);

// E[min over subset] and E[mean over subset] across all C(n, k) subsets.
double enumerate_random_optimal(std::span<const double> means, int k);
double enumerate_random_average(std::span<const double> means, int k);

// Fraction of k-subsets of {0..P-1} containing at least one of the g best.
double enumerate_hit_probability(int roster, int best_group, int k);

// One-sided sign test: P(Bin(n, 1/2) >= wins).
double sign_test_p(int n, int wins);

}  // namespace oracles
