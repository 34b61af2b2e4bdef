#include "metareduce/harness.hpp"

#include "metareduce/landmarking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace metareduce {

double RunOutcome::mean_best_error() const {
    if (status != RunStatus::completed || best_cv.empty()) return 1.0;
    return std::accumulate(best_cv.begin(), best_cv.end(), 0.0) /
           static_cast<double>(best_cv.size());
}

double ResponseSurface::invalid_cost(const std::string&) const { return 1.0; }

// ---------------------------------------------------------------------------
// SurrogateSurface
// ---------------------------------------------------------------------------

SurrogateSurface::SurrogateSurface(int folds, double invalid_rate, double invalid_cost,
                                   std::map<std::pair<std::string, std::string>, Cell> cells)
    : folds_(folds), invalid_rate_(invalid_rate), invalid_cost_(invalid_cost),
      cells_(std::move(cells)) {
    if (folds_ < 2) throw input_error("surface folds must be at least 2");
    if (invalid_rate_ < 0.0 || invalid_rate_ >= 1.0)
        throw input_error("invalid_rate must lie in [0, 1)");
}

SurrogateSurface SurrogateSurface::from_json(const std::string& text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string("surface manifest is not valid JSON: ") + e.what());
    }
    std::map<std::pair<std::string, std::string>, Cell> cells;
    if (!j.contains("cells") || !j["cells"].is_array())
        throw input_error("surface manifest needs a 'cells' array");
    for (const auto& item : j["cells"]) {
        Cell c;
        c.base_error = item.value("base_error", 0.5);
        c.noise_sigma = item.value("noise_sigma", 0.0);
        c.fold_cost = item.value("fold_cost", 1.0);
        c.bowl_depth = item.value("bowl_depth", 0.0);
        c.bowl_center = item.value("bowl_center", 0.5);
        std::string d = item.value("dataset", "");
        std::string p = item.value("predictor", "");
        if (d.empty() || p.empty())
            throw input_error("surface cell needs dataset and predictor ids");
        cells[{d, p}] = c;
    }
    return SurrogateSurface(j.value("folds", 10), j.value("invalid_rate", 0.0),
                            j.value("invalid_cost", 1.0), std::move(cells));
}

SurrogateSurface SurrogateSurface::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open surface manifest: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string SurrogateSurface::to_json() const {
    nlohmann::json j;
    j["folds"] = folds_;
    j["invalid_rate"] = invalid_rate_;
    j["invalid_cost"] = invalid_cost_;
    j["cells"] = nlohmann::json::array();
    for (const auto& [key, c] : cells_) {
        nlohmann::json item;
        item["dataset"] = key.first;
        item["predictor"] = key.second;
        item["base_error"] = c.base_error;
        item["noise_sigma"] = c.noise_sigma;
        item["fold_cost"] = c.fold_cost;
        item["bowl_depth"] = c.bowl_depth;
        item["bowl_center"] = c.bowl_center;
        j["cells"].push_back(item);
    }
    return j.dump(2) + "\n";
}

std::vector<std::string> SurrogateSurface::datasets() const {
    std::vector<std::string> out;
    for (const auto& [key, _] : cells_)
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    return out;
}

std::vector<std::string> SurrogateSurface::predictors() const {
    std::set<std::string> set;
    for (const auto& [key, _] : cells_) set.insert(key.second);
    return {set.begin(), set.end()};
}

const SurrogateSurface::Cell& SurrogateSurface::cell(const std::string& dataset_id,
                                                     const std::string& predictor_id) const {
    auto it = cells_.find({dataset_id, predictor_id});
    if (it == cells_.end())
        throw std::invalid_argument("surface lacks cell (" + dataset_id + ", " + predictor_id +
                                    ")");
    return it->second;
}

double SurrogateSurface::fold_cost(const std::string& dataset_id,
                                   const std::string& predictor_id) const {
    return cell(dataset_id, predictor_id).fold_cost;
}

std::optional<double> SurrogateSurface::evaluate_fold(const std::string& dataset_id,
                                                      const std::string& predictor_id,
                                                      double config, int, Rng& rng) const {
    const Cell& c = cell(dataset_id, predictor_id);
    double offset = config - c.bowl_center;
    double value = c.base_error + c.bowl_depth * offset * offset + c.noise_sigma * rng.normal();
    return std::clamp(value, 0.0, 1.0);
}

RankingTable SurrogateSurface::planted_rankings() const {
    auto ds = datasets();
    std::sort(ds.begin(), ds.end());
    auto ps = predictors();
    std::vector<std::vector<double>> means(ds.size(), std::vector<double>(ps.size(), 1.0));
    for (std::size_t d = 0; d < ds.size(); ++d)
        for (std::size_t p = 0; p < ps.size(); ++p) {
            auto it = cells_.find({ds[d], ps[p]});
            if (it != cells_.end()) means[d][p] = it->second.base_error;
        }
    std::vector<std::vector<double>> ranks;
    for (const auto& row : means) ranks.push_back(rank_with_ties(row));
    return RankingTable("surface", PipelineFilter::all, std::move(ds), std::move(ps),
                        std::move(means), std::move(ranks));
}

// ---------------------------------------------------------------------------
// ReplaySurface
// ---------------------------------------------------------------------------

ReplaySurface::ReplaySurface(const MetaKnowledgeBase& base, double invalid_rate)
    : base_(base), invalid_rate_(invalid_rate) {
    double sum = 0.0;
    long long n = 0;
    for (const auto& r : base.records()) {
        if (r.status != RecordStatus::ok) continue;
        sum += r.eval_time_s;
        ++n;
    }
    default_fold_cost_ = n > 0 ? sum / static_cast<double>(n) : 1.0;
    if (default_fold_cost_ <= 0.0) default_fold_cost_ = 1.0;
}

int ReplaySurface::folds() const { return base_.folds(); }

std::vector<std::string> ReplaySurface::datasets() const {
    return {base_.dataset_universe().begin(), base_.dataset_universe().end()};
}

double ReplaySurface::fold_cost(const std::string& dataset_id,
                                const std::string& predictor_id) const {
    auto agg = base_.aggregate(dataset_id, predictor_id);
    if (agg.n_evaluations == 0 || agg.mean_eval_time <= 0.0) return default_fold_cost_;
    return agg.mean_eval_time;
}

std::optional<double> ReplaySurface::evaluate_fold(const std::string& dataset_id,
                                                   const std::string& predictor_id, double, int,
                                                   Rng& rng) const {
    auto errors = base_.cell_errors(dataset_id, predictor_id);
    if (errors.empty()) return std::nullopt;  // never ran in the trace; cannot replay
    return errors[rng.below(errors.size())];
}

// ---------------------------------------------------------------------------
// Constrained search
// ---------------------------------------------------------------------------

namespace {

constexpr double kExploitProbability = 0.6;
constexpr double kInitialStep = 0.25;
constexpr double kStepDecay = 0.85;

}  // namespace

RunOutcome run_constrained_search(const ReducedSpace& space, const ResponseSurface& surface,
                                  const std::string& dataset_id, const SearchBudget& budget,
                                  std::uint64_t seed) {
    RunOutcome outcome;
    outcome.strategy_label = space.strategy_label;
    outcome.dataset_id = dataset_id;

    const std::vector<std::string> pool = space.search_pool();
    if (pool.empty()) throw std::invalid_argument("run_constrained_search: empty pool");
    const double effective = budget.total_cost - space.landmark_cost;
    if (effective <= 0.0) return outcome;  // landmarking ate the budget: a failed run

    const int folds = budget.folds > 0 ? budget.folds : surface.folds();
    Rng rng(seed);

    struct Best {
        std::string predictor;
        double config = 0.5;
        double mean = 2.0;
        std::vector<double> cv;
    };
    std::optional<Best> best;
    std::vector<long long> tried(pool.size(), 0);
    double spent = 0.0;
    int exploit_count = 0;

    auto affordable = [&](const std::string& predictor) {
        return spent + surface.fold_cost(dataset_id, predictor) <= effective;
    };

    for (long long iteration = 0; iteration < 1000000; ++iteration) {
        bool any = false;
        for (const auto& p : pool)
            if (affordable(p)) any = true;
        if (!any) break;

        // Propose: exploit the incumbent, or explore a uniformly chosen
        // least-evaluated pool member (the optimizer has no ranking
        // knowledge; pool membership is the only information it gets).
        std::size_t pick = 0;
        bool exploit = best.has_value() && rng.u01() < kExploitProbability;
        if (space.locked_pipeline || exploit) {
            const std::string& wanted =
                space.locked_pipeline ? space.locked_pipeline->final_predictor() : best->predictor;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (pool[i] == wanted) pick = i;
        } else {
            long long fewest = *std::min_element(tried.begin(), tried.end());
            std::vector<std::size_t> candidates;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (tried[i] == fewest) candidates.push_back(i);
            pick = candidates[rng.below(candidates.size())];
        }
        const std::string& predictor = pool[pick];
        double config;
        if (exploit) {
            double step = kInitialStep * std::pow(kStepDecay, exploit_count);
            config = std::clamp(best->config + step * rng.normal(), 0.0, 1.0);
        } else {
            config = rng.u01();
        }

        // Invalid-pipeline event: filtered spaces skip it for free, the
        // plain baseline pays for the doomed evaluation.
        if (surface.invalid_rate() > 0.0 && rng.u01() < surface.invalid_rate()) {
            if (!space.validity_filtering)
                spent = std::min(spent + surface.invalid_cost(dataset_id), effective);
            continue;
        }

        ++tried[pick];
        if (!affordable(predictor)) continue;

        std::vector<double> cv;
        cv.reserve(folds);
        bool complete = true;
        for (int f = 0; f < folds; ++f) {
            double cost = surface.fold_cost(dataset_id, predictor);
            if (spent + cost > effective) {
                complete = false;  // budget ran out mid-CV
                spent = effective;
                break;
            }
            spent += cost;
            auto value = surface.evaluate_fold(dataset_id, predictor, config, f, rng);
            if (!value) {
                complete = false;  // evaluation crashed; the fold's cost is sunk
                break;
            }
            cv.push_back(*value);
        }
        if (!complete) continue;

        double mean = std::accumulate(cv.begin(), cv.end(), 0.0) / static_cast<double>(folds);
        if (exploit) ++exploit_count;
        if (!best || mean < best->mean) {
            best = Best{predictor, config, mean, std::move(cv)};
        }
    }

    outcome.cost_spent = spent;
    if (best) {
        outcome.status = RunStatus::completed;
        outcome.best_cv = best->cv;
        if (space.locked_pipeline) {
            outcome.best_pipeline = *space.locked_pipeline;
            outcome.best_pipeline.configs.assign(outcome.best_pipeline.components.size(),
                                                 "default");
            outcome.best_pipeline.configs.back() = "x=" + format_report(best->config);
        } else {
            outcome.best_pipeline.components = {best->predictor};
            outcome.best_pipeline.configs = {"x=" + format_report(best->config)};
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Consistency and ranks
// ---------------------------------------------------------------------------

double consistency(const std::vector<RunOutcome>& outcomes, double alpha) {
    const std::size_t n = outcomes.size();
    if (n < 2) throw std::invalid_argument("consistency needs at least two runs");
    for (const auto& o : outcomes)
        if (o.strategy_label != outcomes.front().strategy_label ||
            o.dataset_id != outcomes.front().dataset_id)
            throw std::invalid_argument("consistency outcomes must share strategy and dataset");

    long long indistinct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (outcomes[i].status != RunStatus::completed ||
                outcomes[j].status != RunStatus::completed)
                continue;  // failures are distinct from everything
            if (welch_p(outcomes[i].best_cv, outcomes[j].best_cv) > alpha) ++indistinct;
        }
    }
    return static_cast<double>(indistinct) / (static_cast<double>(n) * (n - 1) / 2.0);
}

double mean_best_error(const std::vector<RunOutcome>& outcomes, FailurePolicy policy) {
    if (outcomes.empty()) throw std::invalid_argument("mean_best_error: no outcomes");
    double sum = 0.0;
    long long n = 0;
    for (const auto& o : outcomes) {
        if (o.status == RunStatus::completed) {
            sum += o.mean_best_error();
            ++n;
        } else if (policy == FailurePolicy::penalize) {
            sum += 1.0;
            ++n;
        }
    }
    if (n == 0) return 1.0;  // every run failed
    return sum / static_cast<double>(n);
}

std::map<std::string, double> rank_strategies(
    const std::vector<StrategyDatasetReport>& reports,
    std::map<std::string, std::map<std::string, double>>* per_dataset_out) {
    std::map<std::string, std::map<std::string, double>> by_dataset;  // dataset -> strategy -> err
    for (const auto& r : reports) by_dataset[r.dataset_id][r.strategy_label] = r.mean_best_error;

    std::map<std::string, double> rank_sum;
    std::map<std::string, int> rank_n;
    for (const auto& [dataset, cells] : by_dataset) {
        std::vector<std::string> strategies;
        std::vector<double> errors;
        for (const auto& [strategy, err] : cells) {
            strategies.push_back(strategy);
            errors.push_back(err);
        }
        auto ranks = rank_with_ties(errors);
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            rank_sum[strategies[i]] += ranks[i];
            rank_n[strategies[i]] += 1;
            if (per_dataset_out) (*per_dataset_out)[dataset][strategies[i]] = ranks[i];
        }
    }
    std::map<std::string, double> out;
    for (const auto& [strategy, sum] : rank_sum) out[strategy] = sum / rank_n[strategy];
    return out;
}

// ---------------------------------------------------------------------------
// Nemenyi
// ---------------------------------------------------------------------------

namespace {

// Infinite-df studentized-range quantiles divided by sqrt(2), K = 2..20.
// Precomputed from the range-of-K-normals distribution; the K = 2 value is
// the two-sided normal quantile 1.9600 and K <= 10 match the critical-value
// tables in common use to three decimals.
constexpr double kNemenyiQ05[] = {
    1.959963985, 2.343700586, 2.569031773, 2.727774371, 2.849705420, 2.948320018, 3.030878450,
    3.101730341, 3.163683577, 3.218653607, 3.268003924, 3.312738593, 3.353617752, 3.391230284,
    3.426041379, 3.458424707, 3.488684799, 3.517073009, 3.543799132};
constexpr double kNemenyiQ10[] = {
    1.644853627, 2.052292730, 2.291341497, 2.459515764, 2.588520602, 2.692732101, 2.779883608,
    2.854606431, 2.919888840, 2.977768251, 3.029694183, 3.076733468, 3.119693333, 3.159198819,
    3.195743433, 3.229723401, 3.261461490, 3.291223987, 3.319233060};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); }

// CDF of the range of K iid standard normals.
double range_cdf(double r, int k) {
    const double a = -12.0, b = 12.0;
    const int n = 9600;
    const double h = (b - a) / n;
    auto f = [&](double u) { return normal_pdf(u) * std::pow(normal_cdf(u) - normal_cdf(u - r), k - 1); };
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return k * s * h / 3.0;
}

}  // namespace

double nemenyi_q_numeric(int n_strategies, double alpha) {
    double lo = 0.0, hi = 25.0;
    for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        if (range_cdf(mid, n_strategies) < 1.0 - alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi) / std::sqrt(2.0);
}

double nemenyi_q(int n_strategies, double alpha) {
    if (n_strategies < 2) throw std::invalid_argument("nemenyi_q needs at least two strategies");
    bool a05 = std::fabs(alpha - 0.05) < 1e-12;
    bool a10 = std::fabs(alpha - 0.10) < 1e-12;
    if (!a05 && !a10) throw input_error("unsupported Nemenyi alpha (use 0.05 or 0.10)");
    if (n_strategies <= 20) return (a05 ? kNemenyiQ05 : kNemenyiQ10)[n_strategies - 2];
    return nemenyi_q_numeric(n_strategies, alpha);
}

double nemenyi_cd(int n_strategies, int n_datasets, double alpha) {
    if (n_datasets < 1) throw std::invalid_argument("nemenyi_cd needs at least one dataset");
    double q = nemenyi_q(n_strategies, alpha);
    return q * std::sqrt(static_cast<double>(n_strategies) * (n_strategies + 1) /
                         (6.0 * n_datasets));
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

std::vector<AggregateRow> aggregate_report(const StrategyRunReport& report, Grouping grouping) {
    auto group_of = [&](const std::string& label_text) -> std::string {
        StrategyLabel label = parse_strategy_label(label_text);
        switch (grouping) {
            case Grouping::strategy_type: return to_string(label.kind);
            case Grouping::base:
                if (label.base_index > 0) return "X" + std::to_string(label.base_index);
                return "controls";
            case Grouping::k:
                if (label.k > 0) return "k" + std::to_string(label.k);
                return label_text;
        }
        return label_text;
    };

    struct Acc {
        double consistency = 0.0;
        double failures = 0.0;
        long long cells = 0;
        double rank = 0.0;
        std::set<std::string> strategies;
    };
    std::map<std::string, Acc> groups;
    for (const auto& cell : report.per_cell) {
        auto& acc = groups[group_of(cell.strategy_label)];
        acc.consistency += cell.consistency;
        acc.failures += cell.failure_count;
        acc.cells += 1;
        acc.strategies.insert(cell.strategy_label);
    }
    for (const auto& [strategy, rank] : report.average_rank)
        groups[group_of(strategy)].rank += rank;

    std::vector<AggregateRow> out;
    for (const auto& [group, acc] : groups) {
        AggregateRow row;
        row.group = group;
        row.n_strategies = static_cast<int>(acc.strategies.size());
        if (acc.cells > 0) {
            row.mean_consistency = acc.consistency / static_cast<double>(acc.cells);
            row.mean_failures = acc.failures / static_cast<double>(acc.cells);
        }
        if (row.n_strategies > 0) row.mean_rank = acc.rank / row.n_strategies;
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run matrix
// ---------------------------------------------------------------------------

SimulationResult simulate(const SimulationConfig& config, const ResponseSurface& surface,
                          const RankingTable& rankings, const Roster& roster,
                          const MetaKnowledgeBase* landmark_base) {
    if (config.strategies.empty()) throw input_error("simulate: no strategies requested");
    if (config.seeds.empty()) throw input_error("simulate: seed list must be non-empty");
    const int folds = config.budget.folds > 0 ? config.budget.folds : surface.folds();
    if (folds < 2)
        throw input_error("simulate needs at least two CV folds for the consistency tests");

    std::vector<std::string> datasets = config.datasets;
    if (datasets.empty()) datasets = surface.datasets();
    std::sort(datasets.begin(), datasets.end());

    // Landmark profiles are computed once per dataset.
    std::map<std::string, LandmarkResult> landmark_results;
    std::map<std::string, bool> landmark_unsolvable;
    bool wants_landmarks = false;
    for (const auto& s : config.strategies)
        if (s.kind == StrategyKind::landmarked) wants_landmarks = true;
    if (wants_landmarks) {
        if (!landmark_base)
            throw input_error("landmarked strategies need a meta-knowledge base for profiles");
        auto landmarkers = select_landmarkers(
            *landmark_base, std::min<int>(kDefaultLandmarkerCount,
                                          static_cast<int>(landmark_base->predictor_universe().size())));
        for (const auto& d : datasets) {
            auto profile = landmark_profile(*landmark_base, d, landmarkers);
            if (profile.unsolvable) {
                landmark_unsolvable[d] = true;
                continue;  // results stay blank for this dataset
            }
            std::vector<LandmarkProfile> priors;
            for (const auto& other : landmark_base->dataset_universe())
                if (other != d) priors.push_back(landmark_profile(*landmark_base, other, landmarkers));
            auto similar = most_similar_dataset(profile, priors);
            landmark_results[d] =
                LandmarkResult{similar.dataset_id, similar.coefficient, profile.total_landmark_cost};
        }
    }

    SimulationResult result;
    for (const auto& label : config.strategies) {
        for (const auto& dataset : datasets) {
            if (label.kind == StrategyKind::landmarked && landmark_unsolvable.count(dataset))
                continue;
            if (label.kind == StrategyKind::r30 && !config.r30_pipelines.count(dataset))
                throw input_error("r30 needs a prior-best pipeline for dataset " + dataset);

            std::vector<RunOutcome> runs;
            for (std::size_t r = 0; r < config.seeds.size(); ++r) {
                std::uint64_t cell_seed = mix_seed(config.seeds[r], label.text, dataset, r);

                StrategyInputs inputs;
                inputs.target_dataset = dataset;
                inputs.seed = cell_seed;
                if (label.kind == StrategyKind::landmarked)
                    inputs.landmark = landmark_results.at(dataset);
                if (label.kind == StrategyKind::r30)
                    inputs.r30_pipeline = config.r30_pipelines.at(dataset);

                ReducedSpace space = apply_strategy(label, rankings, roster, inputs);
                SearchBudget budget = config.budget;
                budget.landmark_deduction = space.landmark_cost;
                RunOutcome outcome =
                    run_constrained_search(space, surface, dataset, budget, cell_seed);
                outcome.run_index = static_cast<int>(r);
                runs.push_back(outcome);
            }

            StrategyDatasetReport cell;
            cell.strategy_label = label.text;
            cell.dataset_id = dataset;
            cell.consistency = consistency(runs, config.alpha);
            cell.failure_count = static_cast<int>(
                std::count_if(runs.begin(), runs.end(),
                              [](const RunOutcome& o) { return o.status == RunStatus::failed; }));
            cell.mean_best_error = mean_best_error(runs, config.failure_policy);
            result.report.per_cell.push_back(cell);
            for (auto& o : runs) result.outcomes.push_back(std::move(o));
        }
    }

    result.report.average_rank =
        rank_strategies(result.report.per_cell, &result.report.per_dataset_rank);

    NemenyiReport& nem = result.report.nemenyi;
    nem.alpha = config.alpha;
    nem.n_strategies = static_cast<int>(config.strategies.size());
    nem.n_datasets = static_cast<int>(datasets.size());
    if (nem.n_strategies >= 2) {
        nem.cd_value = nemenyi_cd(nem.n_strategies, nem.n_datasets, config.alpha);
        std::vector<std::pair<std::string, double>> ranked(result.report.average_rank.begin(),
                                                           result.report.average_rank.end());
        for (std::size_t i = 0; i < ranked.size(); ++i)
            for (std::size_t j = i + 1; j < ranked.size(); ++j) {
                double gap = std::fabs(ranked[i].second - ranked[j].second);
                if (gap > nem.cd_value)
                    nem.significant_pairs.push_back({ranked[i].first, ranked[j].first, gap});
            }
    }
    return result;
}

}  // namespace metareduce
