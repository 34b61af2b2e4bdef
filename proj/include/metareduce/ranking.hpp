#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metareduce/meta_store.hpp"

namespace metareduce {

// Ascending tie-averaged ranks: the smallest value gets rank 1, equal values
// share the mean of the integer ranks they span (4.5 and 4.5 instead of 4
// and 5). Ranks per call always sum to n(n+1)/2.
std::vector<double> rank_with_ties(std::span<const double> values);

enum class RankingKey { mean_error, best_error };

struct RankingOptions {
    PipelineFilter filter = PipelineFilter::all;
    RankingKey key = RankingKey::mean_error;
};

struct LeaderboardEntry {
    std::string predictor_id;
    double average_rank = 0.0;
};

class RankingTable {
public:
    RankingTable() = default;
    RankingTable(std::string base_id, PipelineFilter filter, std::vector<std::string> datasets,
                 std::vector<std::string> predictors, std::vector<std::vector<double>> means,
                 std::vector<std::vector<double>> ranks);

    const std::string& base_id() const { return base_id_; }
    PipelineFilter filter() const { return filter_; }
    const std::vector<std::string>& datasets() const { return datasets_; }
    const std::vector<std::string>& predictors() const { return predictors_; }

    bool has_dataset(const std::string& id) const;

    double mean_error(const std::string& dataset_id, const std::string& predictor_id) const;
    double rank(const std::string& dataset_id, const std::string& predictor_id) const;

    // Predictor -> tie-averaged rank map for one dataset.
    std::map<std::string, double> dataset_rank_map(const std::string& dataset_id) const;
    std::map<std::string, double> dataset_mean_map(const std::string& dataset_id) const;
    // Predictor -> leaderboard position (1-based) for closure and M pools.
    std::map<std::string, double> leaderboard_rank_map() const;

    // Predictors ordered best-first for one dataset (rank, then id).
    std::vector<std::string> dataset_order(const std::string& dataset_id) const;

    const std::vector<LeaderboardEntry>& leaderboard() const { return leaderboard_; }
    std::vector<std::string> leaderboard_order() const;

private:
    std::size_t dataset_index(const std::string& id) const;
    std::size_t predictor_index(const std::string& id) const;
    void rebuild_leaderboard();

    std::string base_id_;
    PipelineFilter filter_ = PipelineFilter::all;
    std::vector<std::string> datasets_;    // sorted
    std::vector<std::string> predictors_;  // sorted
    std::vector<std::vector<double>> means_;  // [dataset][predictor]
    std::vector<std::vector<double>> ranks_;  // [dataset][predictor]
    std::vector<LeaderboardEntry> leaderboard_;  // ascending average rank, ties by id
};

// Ranks the full roster per dataset (penalty cells included) and compiles
// the cross-dataset leaderboard by ascending mean of per-dataset ranks.
RankingTable build_ranking(const MetaKnowledgeBase& base, const RankingOptions& options = {});

// Leaderboard recompiled from every dataset except the held-out one.
std::vector<LeaderboardEntry> leaderboard_excluding(const MetaKnowledgeBase& base,
                                                    const std::string& held_out_dataset,
                                                    const RankingOptions& options = {});

enum class CorrelationMode { pearson, spearman };

// Pearson product-moment, or Pearson over tie-averaged ranks (Spearman).
// Throws degenerate_input when either side is constant.
double correlate(std::span<const double> xs, std::span<const double> ys, CorrelationMode mode);

struct CrossBaseRow {
    std::string dataset_id;
    std::optional<double> rank_corr;   // absent when the restricted vectors are constant
    std::optional<double> error_corr;
};

struct CrossBaseReport {
    std::vector<CrossBaseRow> per_dataset;
    std::optional<double> leaderboard_rank_corr;
};

struct CrossBaseOptions {
    PipelineFilter filter = PipelineFilter::all;
    bool drop_penalty_cells = false;  // exclude cells unevaluated in either base
};

// Per-dataset rank and error-rate similarity between two bases, restricted to
// a predictor subset (e.g. all 30 vs the 22 without meta-predictors).
CrossBaseReport cross_base_correlations(const MetaKnowledgeBase& base_a,
                                        const MetaKnowledgeBase& base_b,
                                        const std::vector<std::string>& predictor_subset,
                                        const CrossBaseOptions& options = {});

}  // namespace metareduce
