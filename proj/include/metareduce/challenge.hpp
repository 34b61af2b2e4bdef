#pragma once

#include <span>
#include <string>
#include <vector>

#include "metareduce/meta_store.hpp"

namespace metareduce {

// Challenge skewness of a mean-performance distribution:
// (mean - min) / (max - min). Above 0.5 the distribution is top-heavy and
// the dataset counts as "hard"; below 0.5 it is bottom-heavy ("easy").
// Throws degenerate_input when max == min.
double skewness(std::span<const double> means);

inline bool is_hard(double skew) { return skew > 0.5; }

// Two-sided Welch t-test p-value with Welch-Satterthwaite degrees of freedom.
// Conventions when both samples have zero variance: p = 1 for equal means,
// p = 0 otherwise. Throws degenerate_input when either sample has n < 2.
double welch_p(std::span<const double> sample_a, std::span<const double> sample_b);

// Cell values: 1 no significant difference, 0 significant difference,
// -1 untestable.
struct IndistinguishabilityMatrix {
    std::string dataset_id;
    std::string base_id;
    std::vector<std::string> order;  // predictors by ascending mean error
    std::vector<std::vector<int>> cells;
    double alpha = 0.05;

    int at(std::size_t i, std::size_t j) const { return cells[i][j]; }
};

struct MatrixOptions {
    double alpha = 0.05;
    PipelineFilter filter = PipelineFilter::all;
};

// Pairwise Welch tests over a dataset's predictors, pooling single-fold
// evaluations across configurations. A predictor with fewer than two
// completed evaluations, or with zero variance, is untestable: its row and
// column are -1 except against another zero-variance predictor, where the
// equal/unequal-means convention applies.
IndistinguishabilityMatrix indistinguishability_matrix(const MetaKnowledgeBase& base,
                                                       const std::string& dataset_id,
                                                       const MatrixOptions& options = {});

struct PerformerGroups {
    std::string dataset_id;
    std::vector<std::vector<std::string>> groups;  // best group first
    std::vector<std::string> unclassified;         // untestable predictors
    int best_group_size = 0;

    int group_size(std::size_t i) const {
        return i < groups.size() ? static_cast<int>(groups[i].size()) : 0;
    }
};

// Greedy sweep in mean-error order: each group is anchored at its best
// member and extends while the next predictor is indistinguishable from the
// anchor; the first distinguishable predictor anchors the next group, which
// is how a predictor indistinguishable from two adjacent anchors lands in
// the worse-anchored group.
PerformerGroups best_groups(const IndistinguishabilityMatrix& matrix);

// Probability that a uniform random k-subset of P predictors hits at least
// one of the g best: 1 - C(P-g, k)/C(P, k), exact rationals until the final
// conversion.
double random_top_hit_probability(int roster_size, int best_group_size, int k);

}  // namespace metareduce
