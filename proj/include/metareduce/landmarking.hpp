#pragma once

#include <string>
#include <vector>

#include "metareduce/config_space.hpp"
#include "metareduce/meta_store.hpp"
#include "metareduce/ranking.hpp"

namespace metareduce {

struct LandmarkProfile {
    std::string dataset_id;
    std::vector<std::string> landmarker_ids;
    std::vector<double> errors;  // positionally matches landmarker_ids
    double total_landmark_cost = 0.0;
    bool unsolvable = false;  // every entry is the missing-value penalty
};

inline constexpr int kDefaultLandmarkerCount = 5;

// The `count` predictors with the lowest mean evaluation time across all
// pipeline evaluations containing them, cheapest first, ties by id. Only
// predictors with at least one completed record qualify; asking for more
// than that is an error.
std::vector<std::string> select_landmarkers(const MetaKnowledgeBase& base,
                                            int count = kDefaultLandmarkerCount);

// Error vector of the landmarkers on one dataset (mean errors, penalty 1.0
// when unevaluated) plus the cost of one full CV pass per landmarker. A
// profile made entirely of penalties is flagged unsolvable.
LandmarkProfile landmark_profile(const MetaKnowledgeBase& base, const std::string& dataset_id,
                                 const std::vector<std::string>& landmarkers);

struct SimilarityResult {
    std::string dataset_id;
    double coefficient = 0.0;
    std::vector<std::string> skipped;  // constant-vector priors, Pearson undefined
};

// Argmax of the Pearson correlation between the new profile and each prior;
// equal coefficients break toward the smaller dataset id. Unsolvable new
// profiles and prior sets with no usable vector are errors.
SimilarityResult most_similar_dataset(const LandmarkProfile& new_profile,
                                      const std::vector<LandmarkProfile>& prior_profiles);

// Algorithm entry for the landmarked strategies: profiles every other
// dataset of the base, finds the most similar one, and reduces to its best k
// predictors with the landmark cost recorded for budget deduction.
ReducedSpace recommend_landmarked_space(const MetaKnowledgeBase& base, const Roster& roster,
                                        const LandmarkProfile& new_dataset_profile,
                                        const RankingTable& prior_rankings, int k);

}  // namespace metareduce
