#include "metareduce/landmarking.hpp"

#include <algorithm>
#include <limits>

namespace metareduce {

std::vector<std::string> select_landmarkers(const MetaKnowledgeBase& base, int count) {
    if (count < 1) throw std::invalid_argument("landmarker count must be positive");
    if (count > static_cast<int>(base.predictor_universe().size()))
        throw std::invalid_argument("landmarker count exceeds the predictor universe");

    struct Candidate {
        std::string id;
        double mean_time;
    };
    std::vector<Candidate> candidates;
    for (const auto& p : base.predictor_universe()) {
        // Average time over every pipeline evaluation containing the predictor.
        double sum = 0.0;
        long long n = 0;
        for (const auto& r : base.records()) {
            if (r.status != RecordStatus::ok) continue;
            if (std::find(r.pipeline.begin(), r.pipeline.end(), p) == r.pipeline.end()) continue;
            sum += r.eval_time_s;
            ++n;
        }
        if (n > 0) candidates.push_back({p, sum / static_cast<double>(n)});
    }
    if (count > static_cast<int>(candidates.size()))
        throw input_error("landmarker count " + std::to_string(count) + " exceeds the " +
                          std::to_string(candidates.size()) + " evaluable predictors");
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.mean_time != b.mean_time) return a.mean_time < b.mean_time;
        return a.id < b.id;
    });
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) out.push_back(candidates[i].id);
    return out;
}

LandmarkProfile landmark_profile(const MetaKnowledgeBase& base, const std::string& dataset_id,
                                 const std::vector<std::string>& landmarkers) {
    if (!base.has_dataset(dataset_id))
        throw std::invalid_argument("unknown dataset: " + dataset_id);
    LandmarkProfile profile;
    profile.dataset_id = dataset_id;
    profile.landmarker_ids = landmarkers;
    bool any_evaluated = false;
    for (const auto& lm : landmarkers) {
        auto agg = base.aggregate(dataset_id, lm);
        profile.errors.push_back(agg.mean_error);
        if (!agg.penalty()) {
            any_evaluated = true;
            profile.total_landmark_cost += base.ten_fold_cost(dataset_id, lm);
        }
    }
    profile.unsolvable = !any_evaluated;  // mirrors datasets no landmarker could solve
    return profile;
}

namespace {

bool constant_vector(const std::vector<double>& v) {
    for (double x : v)
        if (x != v.front()) return false;
    return true;
}

}  // namespace

SimilarityResult most_similar_dataset(const LandmarkProfile& new_profile,
                                      const std::vector<LandmarkProfile>& prior_profiles) {
    if (prior_profiles.empty())
        throw std::invalid_argument("most_similar_dataset: no prior profiles");
    if (new_profile.unsolvable)
        throw degenerate_input("landmark profile for '" + new_profile.dataset_id +
                               "' is unsolvable; results stay blank");
    if (constant_vector(new_profile.errors))
        throw degenerate_input("landmark vector for '" + new_profile.dataset_id +
                               "' is constant; correlation undefined");

    SimilarityResult best;
    bool found = false;
    for (const auto& prior : prior_profiles) {
        if (prior.landmarker_ids != new_profile.landmarker_ids)
            throw std::invalid_argument("prior profile '" + prior.dataset_id +
                                        "' uses different landmarkers");
        if (constant_vector(prior.errors)) {
            best.skipped.push_back(prior.dataset_id);
            continue;
        }
        double c = correlate(new_profile.errors, prior.errors, CorrelationMode::pearson);
        if (!found || c > best.coefficient ||
            (c == best.coefficient && prior.dataset_id < best.dataset_id)) {
            best.dataset_id = prior.dataset_id;
            best.coefficient = c;
            found = true;
        }
    }
    if (!found)
        throw degenerate_input("most_similar_dataset: every prior profile is degenerate");
    return best;
}

ReducedSpace recommend_landmarked_space(const MetaKnowledgeBase& base, const Roster& roster,
                                        const LandmarkProfile& new_dataset_profile,
                                        const RankingTable& prior_rankings, int k) {
    std::vector<LandmarkProfile> priors;
    for (const auto& d : base.dataset_universe()) {
        if (d == new_dataset_profile.dataset_id) continue;
        priors.push_back(landmark_profile(base, d, new_dataset_profile.landmarker_ids));
    }
    auto similar = most_similar_dataset(new_dataset_profile, priors);

    StrategyLabel label = parse_strategy_label("L-k" + std::to_string(k));
    StrategyInputs inputs;
    inputs.landmark = LandmarkResult{similar.dataset_id, similar.coefficient,
                                     new_dataset_profile.total_landmark_cost};
    return apply_strategy(label, prior_rankings, roster, inputs);
}

}  // namespace metareduce
