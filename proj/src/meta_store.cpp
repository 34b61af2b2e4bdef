#include "metareduce/meta_store.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "metareduce/csv.hpp"

namespace metareduce {

std::string to_string(Flavor flavor) {
    return flavor == Flavor::opportunistic ? "opportunistic" : "systematic";
}

Flavor flavor_from_string(const std::string& s) {
    if (s == "opportunistic") return Flavor::opportunistic;
    if (s == "systematic") return Flavor::systematic;
    throw input_error("unknown flavor: " + s);
}

std::string to_string(PipelineFilter filter) {
    switch (filter) {
        case PipelineFilter::all: return "all";
        case PipelineFilter::single_only: return "single_only";
        case PipelineFilter::multi_only: return "multi_only";
    }
    return "all";
}

PipelineFilter pipeline_filter_from_string(const std::string& s) {
    if (s == "all") return PipelineFilter::all;
    if (s == "single_only") return PipelineFilter::single_only;
    if (s == "multi_only") return PipelineFilter::multi_only;
    throw input_error("unknown pipeline filter: " + s);
}

static bool matches(const EvaluationRecord& r, PipelineFilter filter) {
    switch (filter) {
        case PipelineFilter::all: return true;
        case PipelineFilter::single_only: return r.single_component();
        case PipelineFilter::multi_only: return !r.single_component();
    }
    return true;
}

MetaKnowledgeBase::MetaKnowledgeBase(std::string base_id, Flavor flavor, int folds,
                                     std::vector<EvaluationRecord> records,
                                     const std::optional<Roster>& roster,
                                     bool credit_base_learners)
    : base_id_(std::move(base_id)), flavor_(flavor), folds_(folds), records_(std::move(records)) {
    if (folds_ <= 0) throw input_error("folds must be positive");
    if (roster) {
        for (const auto& c : roster->predictors) predictors_.insert(c.id);
        for (const auto& d : roster->datasets) datasets_.insert(d);
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        predictors_.insert(r.predictor_id);
        datasets_.insert(r.dataset_id);
        cells_[{r.dataset_id, r.predictor_id}].push_back(i);
        if (credit_base_learners && r.pipeline.size() > 1) {
            for (std::size_t p = 0; p + 1 < r.pipeline.size(); ++p) {
                const auto& component = r.pipeline[p];
                if (component == r.predictor_id) continue;
                if (predictors_.count(component))
                    cells_[{r.dataset_id, component}].push_back(i);
            }
        }
    }
}

const std::vector<std::size_t>* MetaKnowledgeBase::cell(const std::string& dataset_id,
                                                        const std::string& predictor_id) const {
    auto it = cells_.find({dataset_id, predictor_id});
    return it == cells_.end() ? nullptr : &it->second;
}

CellAggregate MetaKnowledgeBase::aggregate(const std::string& dataset_id,
                                           const std::string& predictor_id,
                                           PipelineFilter filter) const {
    if (!has_dataset(dataset_id)) throw std::invalid_argument("unknown dataset: " + dataset_id);
    if (!has_predictor(predictor_id))
        throw std::invalid_argument("unknown predictor: " + predictor_id);

    CellAggregate agg;
    agg.dataset_id = dataset_id;
    agg.predictor_id = predictor_id;

    double sum_error = 0.0;
    double sum_time = 0.0;
    double best = 1.0;
    if (const auto* idx = cell(dataset_id, predictor_id)) {
        for (std::size_t i : *idx) {
            const auto& r = records_[i];
            if (!matches(r, filter)) continue;
            if (r.status == RecordStatus::failed) {
                ++agg.n_failed;
                continue;
            }
            ++agg.n_evaluations;
            sum_error += *r.error_rate;
            sum_time += r.eval_time_s;
            best = std::min(best, *r.error_rate);
            if (r.single_component())
                ++agg.n_single_component;
            else
                ++agg.n_multi_component;
        }
    }
    if (agg.n_evaluations > 0) {
        agg.mean_error = sum_error / agg.n_evaluations;
        agg.best_error = best;
        agg.mean_eval_time = sum_time / agg.n_evaluations;
    }
    return agg;
}

double MetaKnowledgeBase::ten_fold_cost(const std::string& dataset_id,
                                        const std::string& predictor_id) const {
    auto agg = aggregate(dataset_id, predictor_id, PipelineFilter::all);
    if (agg.n_evaluations == 0) return 0.0;
    return agg.mean_eval_time * folds_;
}

std::vector<double> MetaKnowledgeBase::cell_errors(const std::string& dataset_id,
                                                   const std::string& predictor_id,
                                                   PipelineFilter filter) const {
    if (!has_dataset(dataset_id)) throw std::invalid_argument("unknown dataset: " + dataset_id);
    if (!has_predictor(predictor_id))
        throw std::invalid_argument("unknown predictor: " + predictor_id);
    std::vector<double> out;
    if (const auto* idx = cell(dataset_id, predictor_id)) {
        for (std::size_t i : *idx) {
            const auto& r = records_[i];
            if (r.status == RecordStatus::ok && matches(r, filter)) out.push_back(*r.error_rate);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

struct RowError {
    std::string message;
};

// Field-level validation shared by the CSV and JSONL parsers. Throws RowError.
EvaluationRecord validate_row(std::string base_id, std::string dataset_id,
                              std::string predictor_id, std::vector<std::string> pipeline,
                              std::string config_id, long long fold_index,
                              std::optional<double> error_rate, double eval_time,
                              const std::string& status_text, const IngestOptions& options) {
    EvaluationRecord r;
    if (base_id.empty()) throw RowError{"empty base_id"};
    if (dataset_id.empty()) throw RowError{"empty dataset_id"};
    if (predictor_id.empty()) throw RowError{"empty predictor_id"};
    if (status_text == "ok")
        r.status = RecordStatus::ok;
    else if (status_text == "failed")
        r.status = RecordStatus::failed;
    else
        throw RowError{"status must be ok or failed, got '" + status_text + "'"};
    if (pipeline.empty()) throw RowError{"empty pipeline"};
    if (pipeline.back() != predictor_id)
        throw RowError{"pipeline must end with predictor_id '" + predictor_id + "'"};
    if (fold_index < 0 || fold_index >= options.folds)
        throw RowError{"fold_index " + std::to_string(fold_index) + " outside [0, " +
                       std::to_string(options.folds - 1) + "]"};
    if (r.status == RecordStatus::ok) {
        if (!error_rate) throw RowError{"completed evaluation missing error_rate"};
        double e = *error_rate;
        if (options.percent) e /= 100.0;
        if (!(e >= 0.0 && e <= 1.0)) throw RowError{"error_rate outside [0,1]"};
        r.error_rate = e;
    } else if (error_rate) {
        throw RowError{"failed evaluation must not carry an error_rate"};
    }
    if (!(eval_time >= 0.0)) throw RowError{"eval_time_s must be >= 0"};
    r.base_id = std::move(base_id);
    r.dataset_id = std::move(dataset_id);
    r.predictor_id = std::move(predictor_id);
    r.pipeline = std::move(pipeline);
    r.config_id = std::move(config_id);
    r.fold_index = static_cast<int>(fold_index);
    r.eval_time_s = eval_time;
    return r;
}

std::vector<std::string> split_pipeline(const std::string& s) {
    std::vector<std::string> out;
    std::string part;
    for (char c : s) {
        if (c == '|') {
            out.push_back(part);
            part.clear();
        } else {
            part += c;
        }
    }
    out.push_back(part);
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

class TraceChecker {
public:
    TraceChecker(Flavor flavor, int folds) : flavor_(flavor), folds_(folds) {}

    // Returns a row-level message, or throws input_error for corruption.
    std::optional<std::string> admit(const EvaluationRecord& r) {
        if (r.status == RecordStatus::ok) {
            auto key = std::make_tuple(r.dataset_id, r.predictor_id, r.config_id, r.fold_index);
            auto [it, inserted] = seen_ok_.emplace(key, *r.error_rate);
            if (!inserted && it->second != *r.error_rate)
                throw input_error("corrupted trace: duplicate completed evaluation (" +
                                  r.dataset_id + ", " + r.predictor_id + ", " + r.config_id +
                                  ", fold " + std::to_string(r.fold_index) +
                                  ") with conflicting error rates");
        }
        if (flavor_ == Flavor::systematic) {
            auto pair_key = std::make_pair(r.dataset_id, r.predictor_id);
            auto [it, inserted] = pair_config_.emplace(pair_key, r.config_id);
            if (!inserted && it->second != r.config_id)
                return "systematic base allows one config per (dataset, predictor); saw '" +
                       r.config_id + "' after '" + it->second + "'";
            if (r.status == RecordStatus::ok) {
                int& n = pair_ok_counts_[pair_key];
                if (n >= folds_)
                    return "systematic base allows at most " + std::to_string(folds_) +
                           " completed records per (dataset, predictor)";
                ++n;
            }
        }
        return std::nullopt;
    }

private:
    Flavor flavor_;
    int folds_;
    std::map<std::tuple<std::string, std::string, std::string, int>, double> seen_ok_;
    std::map<std::pair<std::string, std::string>, std::string> pair_config_;
    std::map<std::pair<std::string, std::string>, int> pair_ok_counts_;
};

}  // namespace

IngestResult ingest_csv(std::istream& in, const std::string& base_id,
                        const IngestOptions& options) {
    static const std::vector<std::string> kHeader = {
        "base_id",    "dataset_id", "predictor_id", "pipeline", "config_id",
        "fold_index", "error_rate", "eval_time_s",  "status"};

    IngestResult result;
    std::string line;
    if (!std::getline(in, line)) throw input_error("empty record stream: missing header");
    auto header = csv::split_line(line);
    if (header != kHeader) throw input_error("unexpected CSV header: " + line);

    std::vector<EvaluationRecord> records;
    TraceChecker checker(options.flavor, options.folds);
    long long row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        auto fields = csv::split_line(line);
        if (fields.size() != kHeader.size()) {
            result.rejects.push_back({row_number, "expected 9 fields, got " +
                                                      std::to_string(fields.size())});
            continue;
        }
        try {
            if (fields[0] != base_id) throw RowError{"base_id '" + fields[0] + "' does not match '" +
                                                     base_id + "'"};
            auto fold = parse_int(fields[5]);
            if (!fold) throw RowError{"fold_index is not an integer: '" + fields[5] + "'"};
            std::optional<double> error;
            if (!fields[6].empty()) {
                error = parse_double(fields[6]);
                if (!error) throw RowError{"error_rate is not a number: '" + fields[6] + "'"};
            }
            auto time = parse_double(fields[7]);
            if (!time) throw RowError{"eval_time_s is not a number: '" + fields[7] + "'"};
            auto record = validate_row(fields[0], fields[1], fields[2], split_pipeline(fields[3]),
                                       fields[4], *fold, error, *time, fields[8], options);
            if (auto msg = checker.admit(record)) {
                result.rejects.push_back({row_number, *msg});
                continue;
            }
            records.push_back(std::move(record));
        } catch (const RowError& e) {
            result.rejects.push_back({row_number, e.message});
        }
    }
    result.base.emplace(base_id, options.flavor, options.folds, std::move(records), options.roster,
                        options.credit_base_learners);
    return result;
}

IngestResult ingest_jsonl(std::istream& in, const std::string& base_id,
                          const IngestOptions& options) {
    using nlohmann::json;
    IngestResult result;
    std::vector<EvaluationRecord> records;
    TraceChecker checker(options.flavor, options.folds);
    std::string line;
    long long row_number = 0;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            std::vector<std::string> pipeline;
            if (j.contains("pipeline")) {
                if (j["pipeline"].is_array())
                    pipeline = j["pipeline"].get<std::vector<std::string>>();
                else
                    pipeline = split_pipeline(j["pipeline"].get<std::string>());
            }
            std::optional<double> error;
            if (j.contains("error_rate") && !j["error_rate"].is_null())
                error = j["error_rate"].get<double>();
            std::string row_base = j.value("base_id", "");
            if (row_base != base_id)
                throw RowError{"base_id '" + row_base + "' does not match '" + base_id + "'"};
            auto record = validate_row(row_base, j.value("dataset_id", ""),
                                       j.value("predictor_id", ""), std::move(pipeline),
                                       j.value("config_id", ""), j.value("fold_index", -1LL),
                                       error, j.value("eval_time_s", -1.0), j.value("status", ""),
                                       options);
            if (auto msg = checker.admit(record)) {
                result.rejects.push_back({row_number, *msg});
                continue;
            }
            records.push_back(std::move(record));
        } catch (const RowError& e) {
            result.rejects.push_back({row_number, e.message});
        } catch (const nlohmann::json::exception& e) {
            result.rejects.push_back({row_number, std::string("bad JSON: ") + e.what()});
        }
    }
    result.base.emplace(base_id, options.flavor, options.folds, std::move(records), options.roster,
                        options.credit_base_learners);
    return result;
}

IngestResult ingest_file(const std::string& path, const std::string& base_id,
                         const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open record file: " + path);
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
        return ingest_jsonl(in, base_id, options);
    return ingest_csv(in, base_id, options);
}

std::string records_to_csv(const MetaKnowledgeBase& base) {
    std::string out =
        "base_id,dataset_id,predictor_id,pipeline,config_id,fold_index,error_rate,eval_time_s,"
        "status\n";
    for (const auto& r : base.records()) {
        std::string pipeline;
        for (std::size_t i = 0; i < r.pipeline.size(); ++i) {
            if (i) pipeline += '|';
            pipeline += r.pipeline[i];
        }
        out += csv::join_line({r.base_id, r.dataset_id, r.predictor_id, pipeline, r.config_id,
                               std::to_string(r.fold_index),
                               r.error_rate ? format_exact(*r.error_rate) : "",
                               format_exact(r.eval_time_s),
                               r.status == RecordStatus::ok ? "ok" : "failed"});
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Counts
// ---------------------------------------------------------------------------

int CountMatrix::at(const std::string& dataset_id, const std::string& predictor_id) const {
    auto d = std::find(datasets.begin(), datasets.end(), dataset_id);
    auto p = std::find(predictors.begin(), predictors.end(), predictor_id);
    if (d == datasets.end() || p == predictors.end())
        throw std::invalid_argument("unknown cell (" + dataset_id + ", " + predictor_id + ")");
    return counts[d - datasets.begin()][p - predictors.begin()];
}

long long CountMatrix::dataset_total(std::size_t row) const {
    return std::accumulate(counts[row].begin(), counts[row].end(), 0LL);
}

long long CountMatrix::predictor_total(std::size_t col) const {
    long long total = 0;
    for (const auto& row : counts) total += row[col];
    return total;
}

static std::vector<std::size_t> order_by_total(std::size_t n,
                                               const std::function<long long(std::size_t)>& total) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return total(a) > total(b); });
    return idx;
}

std::vector<std::size_t> CountMatrix::datasets_by_total() const {
    return order_by_total(datasets.size(), [this](std::size_t i) { return dataset_total(i); });
}

std::vector<std::size_t> CountMatrix::predictors_by_total() const {
    return order_by_total(predictors.size(), [this](std::size_t i) { return predictor_total(i); });
}

CountMatrix evaluation_counts(const MetaKnowledgeBase& base) {
    CountMatrix m;
    m.datasets.assign(base.dataset_universe().begin(), base.dataset_universe().end());
    m.predictors.assign(base.predictor_universe().begin(), base.predictor_universe().end());
    m.counts.assign(m.datasets.size(), std::vector<int>(m.predictors.size(), 0));
    for (std::size_t d = 0; d < m.datasets.size(); ++d)
        for (std::size_t p = 0; p < m.predictors.size(); ++p)
            m.counts[d][p] = base.aggregate(m.datasets[d], m.predictors[p]).n_evaluations;
    return m;
}

}  // namespace metareduce
