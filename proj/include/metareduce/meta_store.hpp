#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metareduce/common.hpp"
#include "metareduce/config_space.hpp"

namespace metareduce {

enum class Flavor { opportunistic, systematic };
enum class RecordStatus { ok, failed };

std::string to_string(Flavor flavor);
Flavor flavor_from_string(const std::string& s);

// One single-fold evaluation of a pipeline on a dataset. error_rate is
// present exactly when the evaluation completed.
struct EvaluationRecord {
    std::string base_id;
    std::string dataset_id;
    std::string predictor_id;
    std::vector<std::string> pipeline;  // final element == predictor_id
    std::string config_id;
    int fold_index = 0;
    std::optional<double> error_rate;
    double eval_time_s = 0.0;
    RecordStatus status = RecordStatus::ok;

    bool single_component() const { return pipeline.size() == 1; }
};

enum class PipelineFilter { all, single_only, multi_only };

std::string to_string(PipelineFilter filter);
PipelineFilter pipeline_filter_from_string(const std::string& s);

// Per-(dataset, predictor) summary. A cell with zero completed evaluations
// takes the missing-value penalty: mean_error = best_error = 1.0.
struct CellAggregate {
    std::string dataset_id;
    std::string predictor_id;
    int n_evaluations = 0;  // completed single-fold records matching the filter
    double mean_error = 1.0;
    double best_error = 1.0;
    double mean_eval_time = 0.0;
    int n_single_component = 0;
    int n_multi_component = 0;
    int n_failed = 0;  // failed records never enter the means

    bool penalty() const { return n_evaluations == 0; }
};

struct IngestOptions {
    Flavor flavor = Flavor::opportunistic;
    int folds = 10;
    bool percent = false;                // error column is 0..100 instead of 0..1
    bool credit_base_learners = false;   // also credit predictors appearing mid-pipeline
    std::optional<Roster> roster;        // declared universes beyond what was observed
};

struct RejectedRow {
    long long row = 0;  // 1-based line number in the source stream
    std::string message;
};

// Immutable after construction; queries are read-only and may run in parallel.
class MetaKnowledgeBase {
public:
    MetaKnowledgeBase(std::string base_id, Flavor flavor, int folds,
                      std::vector<EvaluationRecord> records, const std::optional<Roster>& roster,
                      bool credit_base_learners = false);

    const std::string& base_id() const { return base_id_; }
    Flavor flavor() const { return flavor_; }
    int folds() const { return folds_; }
    const std::vector<EvaluationRecord>& records() const { return records_; }
    const std::set<std::string>& predictor_universe() const { return predictors_; }
    const std::set<std::string>& dataset_universe() const { return datasets_; }

    bool has_dataset(const std::string& id) const { return datasets_.count(id) > 0; }
    bool has_predictor(const std::string& id) const { return predictors_.count(id) > 0; }

    CellAggregate aggregate(const std::string& dataset_id, const std::string& predictor_id,
                            PipelineFilter filter = PipelineFilter::all) const;

    // Abstract cost of one full CV pass: mean single-fold time times folds.
    double ten_fold_cost(const std::string& dataset_id, const std::string& predictor_id) const;

    // Completed single-fold errors for a cell (pooled across configurations).
    std::vector<double> cell_errors(const std::string& dataset_id, const std::string& predictor_id,
                                    PipelineFilter filter = PipelineFilter::all) const;

private:
    friend struct CountMatrixBuilder;

    const std::vector<std::size_t>* cell(const std::string& dataset_id,
                                         const std::string& predictor_id) const;

    std::string base_id_;
    Flavor flavor_;
    int folds_;
    std::vector<EvaluationRecord> records_;
    std::set<std::string> predictors_;
    std::set<std::string> datasets_;
    // Aggregation cache: record indices per (dataset, predictor).
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> cells_;
};

struct IngestResult {
    std::optional<MetaKnowledgeBase> base;
    std::vector<RejectedRow> rejects;
};

// Parses the record CSV (header required) or JSON-lines stream into a
// validated base. Malformed rows land in `rejects` with their line numbers;
// a duplicate (dataset, predictor, config, fold) completed evaluation with a
// conflicting error rate signals a corrupted trace and throws input_error.
IngestResult ingest_csv(std::istream& in, const std::string& base_id, const IngestOptions& options);
IngestResult ingest_jsonl(std::istream& in, const std::string& base_id, const IngestOptions& options);
IngestResult ingest_file(const std::string& path, const std::string& base_id,
                         const IngestOptions& options);

// Serializes records back to the ingest CSV schema (error rates as fractions,
// exact round-trip formatting).
std::string records_to_csv(const MetaKnowledgeBase& base);

// Dense completed-evaluation counts over the full universes.
struct CountMatrix {
    std::vector<std::string> datasets;    // sorted
    std::vector<std::string> predictors;  // sorted
    std::vector<std::vector<int>> counts;  // [dataset][predictor]

    int at(const std::string& dataset_id, const std::string& predictor_id) const;
    long long dataset_total(std::size_t row) const;
    long long predictor_total(std::size_t col) const;
    // Index orders by descending total (ties by id) for report emission.
    std::vector<std::size_t> datasets_by_total() const;
    std::vector<std::size_t> predictors_by_total() const;
};

CountMatrix evaluation_counts(const MetaKnowledgeBase& base);

}  // namespace metareduce
