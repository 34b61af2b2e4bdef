#include "metareduce/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metareduce {

std::vector<double> rank_with_ties(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("rank_with_ties: empty input");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share the average of ranks i+1..j+1
        double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

RankingTable::RankingTable(std::string base_id, PipelineFilter filter,
                           std::vector<std::string> datasets, std::vector<std::string> predictors,
                           std::vector<std::vector<double>> means,
                           std::vector<std::vector<double>> ranks)
    : base_id_(std::move(base_id)),
      filter_(filter),
      datasets_(std::move(datasets)),
      predictors_(std::move(predictors)),
      means_(std::move(means)),
      ranks_(std::move(ranks)) {
    rebuild_leaderboard();
}

bool RankingTable::has_dataset(const std::string& id) const {
    return std::find(datasets_.begin(), datasets_.end(), id) != datasets_.end();
}

std::size_t RankingTable::dataset_index(const std::string& id) const {
    auto it = std::find(datasets_.begin(), datasets_.end(), id);
    if (it == datasets_.end()) throw std::invalid_argument("unknown dataset: " + id);
    return static_cast<std::size_t>(it - datasets_.begin());
}

std::size_t RankingTable::predictor_index(const std::string& id) const {
    auto it = std::find(predictors_.begin(), predictors_.end(), id);
    if (it == predictors_.end()) throw std::invalid_argument("unknown predictor: " + id);
    return static_cast<std::size_t>(it - predictors_.begin());
}

double RankingTable::mean_error(const std::string& dataset_id,
                                const std::string& predictor_id) const {
    return means_[dataset_index(dataset_id)][predictor_index(predictor_id)];
}

double RankingTable::rank(const std::string& dataset_id, const std::string& predictor_id) const {
    return ranks_[dataset_index(dataset_id)][predictor_index(predictor_id)];
}

std::map<std::string, double> RankingTable::dataset_rank_map(const std::string& dataset_id) const {
    std::map<std::string, double> out;
    std::size_t d = dataset_index(dataset_id);
    for (std::size_t p = 0; p < predictors_.size(); ++p) out[predictors_[p]] = ranks_[d][p];
    return out;
}

std::map<std::string, double> RankingTable::dataset_mean_map(const std::string& dataset_id) const {
    std::map<std::string, double> out;
    std::size_t d = dataset_index(dataset_id);
    for (std::size_t p = 0; p < predictors_.size(); ++p) out[predictors_[p]] = means_[d][p];
    return out;
}

std::map<std::string, double> RankingTable::leaderboard_rank_map() const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < leaderboard_.size(); ++i)
        out[leaderboard_[i].predictor_id] = static_cast<double>(i + 1);
    return out;
}

std::vector<std::string> RankingTable::dataset_order(const std::string& dataset_id) const {
    std::size_t d = dataset_index(dataset_id);
    std::vector<std::size_t> idx(predictors_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (ranks_[d][a] != ranks_[d][b]) return ranks_[d][a] < ranks_[d][b];
        return predictors_[a] < predictors_[b];
    });
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(predictors_[i]);
    return out;
}

std::vector<std::string> RankingTable::leaderboard_order() const {
    std::vector<std::string> out;
    out.reserve(leaderboard_.size());
    for (const auto& e : leaderboard_) out.push_back(e.predictor_id);
    return out;
}

void RankingTable::rebuild_leaderboard() {
    leaderboard_.clear();
    if (datasets_.empty()) return;
    for (std::size_t p = 0; p < predictors_.size(); ++p) {
        double sum = 0.0;
        for (std::size_t d = 0; d < datasets_.size(); ++d) sum += ranks_[d][p];
        leaderboard_.push_back({predictors_[p], sum / static_cast<double>(datasets_.size())});
    }
    std::sort(leaderboard_.begin(), leaderboard_.end(), [](const auto& a, const auto& b) {
        if (a.average_rank != b.average_rank) return a.average_rank < b.average_rank;
        return a.predictor_id < b.predictor_id;
    });
}

static std::vector<std::vector<double>> mean_matrix(const MetaKnowledgeBase& base,
                                                    const std::vector<std::string>& datasets,
                                                    const std::vector<std::string>& predictors,
                                                    const RankingOptions& options) {
    std::vector<std::vector<double>> means(datasets.size(),
                                           std::vector<double>(predictors.size(), 1.0));
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (std::size_t p = 0; p < predictors.size(); ++p) {
            auto agg = base.aggregate(datasets[d], predictors[p], options.filter);
            means[d][p] =
                options.key == RankingKey::mean_error ? agg.mean_error : agg.best_error;
        }
    }
    return means;
}

RankingTable build_ranking(const MetaKnowledgeBase& base, const RankingOptions& options) {
    std::vector<std::string> datasets(base.dataset_universe().begin(),
                                      base.dataset_universe().end());
    std::vector<std::string> predictors(base.predictor_universe().begin(),
                                        base.predictor_universe().end());
    auto means = mean_matrix(base, datasets, predictors, options);
    std::vector<std::vector<double>> ranks;
    ranks.reserve(datasets.size());
    for (const auto& row : means) ranks.push_back(rank_with_ties(row));
    return RankingTable(base.base_id(), options.filter, std::move(datasets), std::move(predictors),
                        std::move(means), std::move(ranks));
}

std::vector<LeaderboardEntry> leaderboard_excluding(const MetaKnowledgeBase& base,
                                                    const std::string& held_out_dataset,
                                                    const RankingOptions& options) {
    if (!base.has_dataset(held_out_dataset))
        throw std::invalid_argument("unknown dataset: " + held_out_dataset);
    if (base.dataset_universe().size() < 2)
        throw std::invalid_argument("leaderboard_excluding needs at least two datasets");

    std::vector<std::string> datasets;
    for (const auto& d : base.dataset_universe())
        if (d != held_out_dataset) datasets.push_back(d);
    std::vector<std::string> predictors(base.predictor_universe().begin(),
                                        base.predictor_universe().end());
    auto means = mean_matrix(base, datasets, predictors, options);
    std::vector<std::vector<double>> ranks;
    for (const auto& row : means) ranks.push_back(rank_with_ties(row));
    RankingTable table(base.base_id(), options.filter, std::move(datasets), std::move(predictors),
                       std::move(means), std::move(ranks));
    return table.leaderboard();
}

double correlate(std::span<const double> xs, std::span<const double> ys, CorrelationMode mode) {
    if (xs.size() != ys.size()) throw std::invalid_argument("correlate: length mismatch");
    if (xs.size() < 2) throw degenerate_input("correlate: need at least two points");

    std::vector<double> a(xs.begin(), xs.end());
    std::vector<double> b(ys.begin(), ys.end());
    if (mode == CorrelationMode::spearman) {
        a = rank_with_ties(a);
        b = rank_with_ties(b);
    }
    const std::size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma;
        double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw degenerate_input("correlate: constant vector has no defined correlation");
    double r = sab / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

CrossBaseReport cross_base_correlations(const MetaKnowledgeBase& base_a,
                                        const MetaKnowledgeBase& base_b,
                                        const std::vector<std::string>& predictor_subset,
                                        const CrossBaseOptions& options) {
    if (predictor_subset.empty())
        throw std::invalid_argument("cross_base_correlations: empty predictor subset");
    for (const auto& p : predictor_subset)
        if (!base_a.has_predictor(p) || !base_b.has_predictor(p))
            throw std::invalid_argument("predictor '" + p + "' missing from a base universe");
    if (predictor_subset.size() < 2)
        throw degenerate_input("cross_base_correlations: subset of one predictor is degenerate");

    std::vector<std::string> datasets;
    for (const auto& d : base_a.dataset_universe())
        if (base_b.has_dataset(d)) datasets.push_back(d);
    if (datasets.empty())
        throw std::invalid_argument("cross_base_correlations: no shared datasets");

    CrossBaseReport report;
    for (const auto& d : datasets) {
        std::vector<double> ea, eb;
        for (const auto& p : predictor_subset) {
            auto agg_a = base_a.aggregate(d, p, options.filter);
            auto agg_b = base_b.aggregate(d, p, options.filter);
            if (options.drop_penalty_cells && (agg_a.penalty() || agg_b.penalty())) continue;
            ea.push_back(agg_a.mean_error);
            eb.push_back(agg_b.mean_error);
        }
        CrossBaseRow row;
        row.dataset_id = d;
        try {
            row.rank_corr = correlate(ea, eb, CorrelationMode::spearman);
        } catch (const degenerate_input&) {
        }
        try {
            row.error_corr = correlate(ea, eb, CorrelationMode::pearson);
        } catch (const degenerate_input&) {
        }
        report.per_dataset.push_back(std::move(row));
    }

    auto table_a = build_ranking(base_a, {options.filter, RankingKey::mean_error});
    auto table_b = build_ranking(base_b, {options.filter, RankingKey::mean_error});
    std::map<std::string, double> la, lb;
    for (const auto& e : table_a.leaderboard()) la[e.predictor_id] = e.average_rank;
    for (const auto& e : table_b.leaderboard()) lb[e.predictor_id] = e.average_rank;
    std::vector<double> va, vb;
    for (const auto& p : predictor_subset) {
        va.push_back(la.at(p));
        vb.push_back(lb.at(p));
    }
    try {
        report.leaderboard_rank_corr = correlate(va, vb, CorrelationMode::spearman);
    } catch (const degenerate_input&) {
    }
    return report;
}

}  // namespace metareduce
