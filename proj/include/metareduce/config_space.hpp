#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metareduce/common.hpp"

namespace metareduce {

enum class ComponentKind { predictor, meta_predictor, kernel, preprocessor };

std::string to_string(ComponentKind kind);
ComponentKind component_kind_from_string(const std::string& s);

// One entry of the component roster. Meta-predictors implicitly require a
// base learner; kernels name the specific predictor that hosts them.
struct ComponentSpec {
    std::string id;
    ComponentKind kind = ComponentKind::predictor;
    std::optional<std::string> host;  // set iff kind == kernel

    bool needs_base_learner() const { return kind == ComponentKind::meta_predictor; }
};

// The declared component universe: every predictor-slot component (plain
// predictors, meta-predictors, kernels), the preprocessor pool, and the
// dataset ids an experiment covers.
struct Roster {
    std::vector<ComponentSpec> predictors;  // predictor-slot components
    std::vector<std::string> preprocessors;
    std::vector<std::string> datasets;

    const ComponentSpec* find(const std::string& id) const;
    std::vector<std::string> predictor_ids() const;
    std::set<std::string> predictor_id_set() const;
};

Roster load_roster_json(const std::string& text);
Roster load_roster_file(const std::string& path);
std::string roster_to_json(const Roster& roster);

// A sequential pipeline: preprocessor chain ending in a predictor-slot
// component, with one config id per slot.
struct Pipeline {
    std::vector<std::string> components;
    std::vector<std::string> configs;

    static constexpr int kDefaultMaxLen = 7;

    std::string final_predictor() const;
    std::string joined() const;  // components joined with '|'
};

void validate_pipeline(const Roster& roster, const Pipeline& pipeline,
                       int max_len = Pipeline::kDefaultMaxLen);

// ---------------------------------------------------------------------------
// Strategy labels
// ---------------------------------------------------------------------------

enum class StrategyKind { oracle, leaderboard, landmarked, random_cull, baseline, avatar, r30 };

std::string to_string(StrategyKind kind);

struct StrategyLabel {
    StrategyKind kind = StrategyKind::baseline;
    int base_index = 0;  // 0 when the label omits it (plain "O-k4")
    int k = 0;           // 0 for the controls
    std::optional<std::uint64_t> seed;  // only via "R-k4:seed=7"
    std::string text;    // the label exactly as given

    bool is_control() const {
        return kind == StrategyKind::baseline || kind == StrategyKind::avatar ||
               kind == StrategyKind::r30;
    }
};

// Parses labels in the forms O1-k4, M2-k10, L1-k8, R-k4, R-k4:seed=7,
// baseline, avatar, r30. Throws input_error on anything else.
StrategyLabel parse_strategy_label(const std::string& text);

// ---------------------------------------------------------------------------
// Reduced spaces
// ---------------------------------------------------------------------------

struct ReducedSpace {
    std::string strategy_label;
    std::vector<std::string> predictor_pool;  // the k requested, before closure
    int k_requested = 0;
    std::vector<std::string> closure_added;
    double landmark_cost = 0.0;
    std::string provenance;
    bool validity_filtering = true;  // false only for the plain baseline
    std::optional<Pipeline> locked_pipeline;  // set for r30

    // Pool plus closure, in that order: the space the optimizer may search.
    std::vector<std::string> search_pool() const;
};

// Pulls required dependencies into the pool: any member needing a base
// learner gains the best-ranked plain predictor outside the pool, and a bare
// kernel gains its host. `rank_of` maps predictor id to rank value (lower is
// better); ids missing from it sort last. Returns the added ids in order.
std::vector<std::string> close_dependencies(const std::vector<std::string>& pool,
                                            const std::map<std::string, double>& rank_of,
                                            const Roster& roster);

class RankingTable;  // ranking.hpp

struct LandmarkResult {
    std::string neighbor_dataset;
    double coefficient = 0.0;
    double landmark_cost = 0.0;
};

struct StrategyInputs {
    std::string target_dataset;                  // oracle strategies
    std::optional<LandmarkResult> landmark;      // landmarked strategies
    std::optional<std::uint64_t> seed;           // random culling
    std::optional<Pipeline> r30_pipeline;        // the prior-best pipeline
};

// Materializes one reduction strategy against a ranking table, applying
// dependency closure. Oracle pools are prefix-monotone in k; random pools are
// reproducible from the seed.
ReducedSpace apply_strategy(const StrategyLabel& label, const RankingTable& table,
                            const Roster& roster, const StrategyInputs& inputs);

inline ReducedSpace apply_strategy(const std::string& label, const RankingTable& table,
                                   const Roster& roster, const StrategyInputs& inputs) {
    return apply_strategy(parse_strategy_label(label), table, roster, inputs);
}

// ---------------------------------------------------------------------------
// Space size
// ---------------------------------------------------------------------------

// Number of distinct hyperparameter arrangements per component of each kind.
struct Discretization {
    std::map<ComponentKind, std::uint64_t> arrangements;

    std::uint64_t of(ComponentKind kind) const {
        auto it = arrangements.find(kind);
        return it == arrangements.end() ? 1 : it->second;
    }
};

struct SpaceSize {
    std::string decimal;                  // always populated, exact
    std::optional<std::uint64_t> value;   // present when the count fits 2^63-1
};

// Counts structurally distinct pipelines: a preprocessor chain of length
// <= max_len-1 followed by one predictor-slot component, each slot weighted
// by its kind's arrangement count. Exact integer arithmetic throughout.
SpaceSize space_size(const Roster& roster, int max_len, const Discretization& disc);

}  // namespace metareduce
