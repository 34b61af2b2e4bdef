#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metareduce/challenge.hpp"
#include "metareduce/config_space.hpp"
#include "metareduce/meta_store.hpp"
#include "metareduce/ranking.hpp"

namespace metareduce {

// Abstract cost units standing in for the wall clock. A landmarked space's
// evaluation cost is deducted before the search may spend anything.
struct SearchBudget {
    double total_cost = 0.0;
    double landmark_deduction = 0.0;
    int runs_per_strategy = 5;
    int folds = 10;
};

enum class RunStatus { completed, failed };

struct RunOutcome {
    std::string strategy_label;
    std::string dataset_id;
    int run_index = 0;
    RunStatus status = RunStatus::failed;
    std::vector<double> best_cv;  // exactly `folds` entries when completed
    Pipeline best_pipeline;
    double cost_spent = 0.0;

    double mean_best_error() const;
};

// The optimizer's view of an experiment: it proposes (predictor, config)
// pairs, receives per-fold errors, and pays per-fold costs.
class ResponseSurface {
public:
    virtual ~ResponseSurface() = default;

    virtual int folds() const = 0;
    virtual std::vector<std::string> datasets() const = 0;
    virtual double fold_cost(const std::string& dataset_id,
                             const std::string& predictor_id) const = 0;
    // Fraction of proposals that are invalid pipelines. Spaces with validity
    // filtering skip them for free; the plain baseline pays invalid_cost.
    virtual double invalid_rate() const { return 0.0; }
    virtual double invalid_cost(const std::string& dataset_id) const;
    // One fold's error for a proposal, or nullopt when the evaluation cannot
    // run (e.g. no recorded behavior to replay). config is a point in [0,1].
    virtual std::optional<double> evaluate_fold(const std::string& dataset_id,
                                                const std::string& predictor_id, double config,
                                                int fold, Rng& rng) const = 0;
};

// Synthetic response surface: per (dataset, predictor) a base error plus a
// quadratic hyperparameter bowl and seeded Gaussian fold noise, with a
// planted per-fold cost.
class SurrogateSurface : public ResponseSurface {
public:
    struct Cell {
        double base_error = 0.5;
        double noise_sigma = 0.0;
        double fold_cost = 1.0;
        double bowl_depth = 0.0;
        double bowl_center = 0.5;
    };

    SurrogateSurface(int folds, double invalid_rate, double invalid_cost,
                     std::map<std::pair<std::string, std::string>, Cell> cells);

    static SurrogateSurface from_json(const std::string& text);
    static SurrogateSurface from_file(const std::string& path);
    std::string to_json() const;

    int folds() const override { return folds_; }
    std::vector<std::string> datasets() const override;
    std::vector<std::string> predictors() const;
    double fold_cost(const std::string& dataset_id,
                     const std::string& predictor_id) const override;
    double invalid_rate() const override { return invalid_rate_; }
    double invalid_cost(const std::string&) const override { return invalid_cost_; }
    std::optional<double> evaluate_fold(const std::string& dataset_id,
                                        const std::string& predictor_id, double config, int fold,
                                        Rng& rng) const override;

    const Cell& cell(const std::string& dataset_id, const std::string& predictor_id) const;

    // Ranking table over base errors: the planted ground truth the oracle
    // and leaderboard strategies read.
    RankingTable planted_rankings() const;

private:
    int folds_;
    double invalid_rate_;
    double invalid_cost_;
    std::map<std::pair<std::string, std::string>, Cell> cells_;
};

// Replays a meta-knowledge base: fold errors are drawn from the recorded
// single-fold error distribution of the (dataset, predictor) cell, and fold
// cost is the cell's mean evaluation time.
class ReplaySurface : public ResponseSurface {
public:
    ReplaySurface(const MetaKnowledgeBase& base, double invalid_rate = 0.0);

    int folds() const override;
    std::vector<std::string> datasets() const override;
    double fold_cost(const std::string& dataset_id,
                     const std::string& predictor_id) const override;
    double invalid_rate() const override { return invalid_rate_; }
    std::optional<double> evaluate_fold(const std::string& dataset_id,
                                        const std::string& predictor_id, double config, int fold,
                                        Rng& rng) const override;

private:
    const MetaKnowledgeBase& base_;
    double invalid_rate_;
    double default_fold_cost_;
};

// Budgeted random search with greedy exploitation over the reduced space:
// exploration cycles through the least-tried pool members with random
// configs, exploitation perturbs the incumbent with a shrinking step. The
// outcome is the best full-CV evaluation achieved, or failed when no
// proposal completes a full CV within budget. Deterministic given the seed.
RunOutcome run_constrained_search(const ReducedSpace& space, const ResponseSurface& surface,
                                  const std::string& dataset_id, const SearchBudget& budget,
                                  std::uint64_t seed);

// Fraction of run pairs whose best CV vectors a Welch test cannot tell
// apart. Every pair involving a failed run counts as distinguishable, which
// caps consistency at C(completed, 2)/C(runs, 2).
double consistency(const std::vector<RunOutcome>& outcomes, double alpha = 0.05);

enum class FailurePolicy { penalize, drop };

// Mean best error of a strategy's runs on one dataset. Failed runs either
// contribute the 1.0 penalty (default) or are dropped; all runs failed
// yields 1.0 under both policies.
double mean_best_error(const std::vector<RunOutcome>& outcomes,
                       FailurePolicy policy = FailurePolicy::penalize);

struct StrategyDatasetReport {
    std::string strategy_label;
    std::string dataset_id;
    double consistency = 0.0;
    int failure_count = 0;
    double mean_best_error = 1.0;
};

struct NemenyiPair {
    std::string strategy_a;
    std::string strategy_b;
    double gap = 0.0;
};

struct NemenyiReport {
    double cd_value = 0.0;
    double alpha = 0.05;
    int n_strategies = 0;
    int n_datasets = 0;
    std::vector<NemenyiPair> significant_pairs;
};

struct StrategyRunReport {
    std::vector<StrategyDatasetReport> per_cell;
    std::map<std::string, std::map<std::string, double>> per_dataset_rank;  // [dataset][strategy]
    std::map<std::string, double> average_rank;  // per strategy
    NemenyiReport nemenyi;
};

// Tie-averaged strategy ranks per dataset (rank 1 = lowest mean best error),
// averaged across datasets.
std::map<std::string, double> rank_strategies(
    const std::vector<StrategyDatasetReport>& reports,
    std::map<std::string, std::map<std::string, double>>* per_dataset_out = nullptr);

// Nemenyi critical difference: q_alpha(K) * sqrt(K(K+1)/(6N)). Quantiles
// come from an embedded infinite-df studentized-range table for K <= 20 and
// from numerical quantile evaluation beyond. alpha must be 0.05 or 0.10.
double nemenyi_cd(int n_strategies, int n_datasets, double alpha);

// Upper-alpha quantile of the range of K standard normals divided by
// sqrt(2): the Nemenyi q value. Exposed for the table/quadrature cross-check.
double nemenyi_q(int n_strategies, double alpha);
double nemenyi_q_numeric(int n_strategies, double alpha);

enum class Grouping { strategy_type, base, k };

struct AggregateRow {
    std::string group;  // e.g. "O", "1", "k4"
    double mean_consistency = 0.0;
    double mean_failures = 0.0;
    double mean_rank = 0.0;
    int n_strategies = 0;
};

std::vector<AggregateRow> aggregate_report(const StrategyRunReport& report, Grouping grouping);

// ---------------------------------------------------------------------------
// Run matrix orchestration
// ---------------------------------------------------------------------------

struct SimulationConfig {
    std::vector<StrategyLabel> strategies;
    std::vector<std::string> datasets;          // defaults to the surface's datasets
    std::vector<std::uint64_t> seeds;           // one run per seed
    SearchBudget budget;
    double alpha = 0.05;
    FailurePolicy failure_policy = FailurePolicy::penalize;
    std::map<std::string, Pipeline> r30_pipelines;  // per dataset, for r30
};

struct SimulationResult {
    std::vector<RunOutcome> outcomes;  // ordered by (strategy, dataset, run)
    StrategyRunReport report;
};

// Runs every (strategy, dataset, seed) cell with its own derived seed. The
// landmarked strategies draw profiles from `landmark_base` when provided.
SimulationResult simulate(const SimulationConfig& config, const ResponseSurface& surface,
                          const RankingTable& rankings, const Roster& roster,
                          const MetaKnowledgeBase* landmark_base = nullptr);

}  // namespace metareduce
