#include "metareduce/synth.hpp"

#include <filesystem>
#include <fstream>

namespace metareduce::synth {

namespace {

constexpr int kDatasets = 5;
constexpr int kPredictors = 8;

const char* kDatasetIds[kDatasets] = {"d1", "d2", "d3", "d4", "d5"};
const char* kPredictorIds[kPredictors] = {"P0", "P1", "P2", "P3", "P4", "P5", "P6", "P7"};

// Per-predictor evaluation time in seconds; P0..P4 are the cheap landmarkers.
constexpr double kEvalTime[kPredictors] = {0.5, 1.0, 1.5, 2.0, 2.5, 15.0, 16.0, 17.0};

// Planted mean error per (dataset, predictor), chosen so that:
//  - d1/d2 share one landmark shape (d2 near-affine in d1), d3/d4 share an
//    exactly affine convex shape, so the similarity neighbors are
//    d1<->d2, d3<->d4, and d5 -> d2;
//  - every dataset except d5 ranks predictors P0 < P1 < ... < P7, while d5
//    ranks them P3 < P0 < P1 < P4 < P5 < P6 < P7 < P2, which flips exactly
//    the (P2, P3) pair on the full leaderboard.
constexpr double kAutomlMean[kDatasets][kPredictors] = {
    {0.08, 0.16, 0.24, 0.32, 0.40, 0.48, 0.56, 0.64},          // d1
    {0.10, 0.18, 0.261, 0.34, 0.42, 0.50, 0.58, 0.66},         // d2
    {0.10, 0.11, 0.13, 0.30, 0.60, 0.70, 0.80, 0.90},          // d3
    {0.10, 0.105, 0.115, 0.20, 0.35, 0.40, 0.45, 0.50},        // d4 = 0.5*d3 + 0.05
    {0.16, 0.24, 0.64, 0.08, 0.32, 0.40, 0.48, 0.56},          // d5 (adversarial)
};

std::vector<std::string> pipeline_for(int predictor, bool multi) {
    const std::string id = kPredictorIds[predictor];
    if (id == "P5") return {"P6", "P5"};  // meta-predictor wraps a base learner
    if (id == "P7") return {"P6", "P7"};  // kernel rides on its host
    if (multi) return {"pre0", id};
    return {id};
}

// Zero-sum offsets around the planted mean keep sample means on target while
// giving each cell nonzero variance.
std::vector<double> deltas(int n, double unit) {
    std::vector<double> out;
    if (n % 2 == 1) out.push_back(0.0);
    for (int t = 1; static_cast<int>(out.size()) < n; ++t) {
        out.push_back(unit * t);
        out.push_back(-unit * t);
    }
    out.resize(n);
    return out;
}

Roster sample_roster() {
    Roster roster;
    for (int j = 0; j < kPredictors; ++j) {
        ComponentSpec spec;
        spec.id = kPredictorIds[j];
        if (spec.id == "P5") {
            spec.kind = ComponentKind::meta_predictor;
        } else if (spec.id == "P7") {
            spec.kind = ComponentKind::kernel;
            spec.host = "P6";
        } else {
            spec.kind = ComponentKind::predictor;
        }
        roster.predictors.push_back(spec);
    }
    roster.preprocessors = {"pre0"};
    roster.datasets.assign(kDatasetIds, kDatasetIds + kDatasets);
    return roster;
}

}  // namespace

MetaKnowledgeBase SampleData::automl_base(bool credit_base_learners) const {
    return MetaKnowledgeBase("automl", Flavor::opportunistic, 10, automl_records, roster,
                             credit_base_learners);
}

MetaKnowledgeBase SampleData::default_base() const {
    return MetaKnowledgeBase("default", Flavor::systematic, 10, default_records, roster);
}

SampleData make_sample_data() {
    SampleData data;
    data.roster = sample_roster();

    nlohmann::json counts = nlohmann::json::object();
    nlohmann::json automl_means = nlohmann::json::object();
    nlohmann::json default_means = nlohmann::json::object();

    for (int i = 0; i < kDatasets; ++i) {
        const std::string dataset = kDatasetIds[i];
        counts[dataset] = nlohmann::json::object();
        automl_means[dataset] = nlohmann::json::object();
        default_means[dataset] = nlohmann::json::object();
        for (int j = 0; j < kPredictors; ++j) {
            const std::string predictor = kPredictorIds[j];
            const double mean = kAutomlMean[i][j];
            const int n = 3 + (i + 1 + j) % 4;
            const bool has_multi = (i + 1 + j) % 2 == 0;
            auto offsets = deltas(n, 0.005);
            for (int t = 0; t < n; ++t) {
                EvaluationRecord r;
                r.base_id = "automl";
                r.dataset_id = dataset;
                r.predictor_id = predictor;
                r.pipeline = pipeline_for(j, has_multi && t == n - 1);
                r.config_id = "c" + std::to_string(t);
                r.fold_index = t % 10;
                r.error_rate = mean + offsets[t];
                r.eval_time_s = kEvalTime[j];
                r.status = RecordStatus::ok;
                data.automl_records.push_back(std::move(r));
            }
            counts[dataset][predictor] = n;
            automl_means[dataset][predictor] = mean;

            // Systematic flavor: one default configuration, ten folds. d3 is
            // planted anti-correlated with the opportunistic base.
            const double default_mean = kAutomlMean[i][i == 2 ? kPredictors - 1 - j : j];
            auto fold_offsets = deltas(10, 0.002);
            for (int f = 0; f < 10; ++f) {
                EvaluationRecord r;
                r.base_id = "default";
                r.dataset_id = dataset;
                r.predictor_id = predictor;
                r.pipeline = pipeline_for(j, false);
                r.config_id = "default";
                r.fold_index = f;
                r.error_rate = default_mean + fold_offsets[f];
                r.eval_time_s = kEvalTime[j];
                r.status = RecordStatus::ok;
                data.default_records.push_back(std::move(r));
            }
            default_means[dataset][predictor] = default_mean;
        }
    }

    // A couple of failed evaluations; they carry no error and no aggregate weight.
    EvaluationRecord f1;
    f1.base_id = "automl";
    f1.dataset_id = "d3";
    f1.predictor_id = "P5";
    f1.pipeline = {"P6", "P5"};
    f1.config_id = "cF";
    f1.fold_index = 0;
    f1.eval_time_s = 15.0;
    f1.status = RecordStatus::failed;
    data.automl_records.push_back(f1);
    EvaluationRecord f2 = f1;
    f2.dataset_id = "d5";
    f2.predictor_id = "P7";
    f2.pipeline = {"P6", "P7"};
    f2.fold_index = 1;
    f2.eval_time_s = 17.0;
    data.automl_records.push_back(f2);

    double landmark_cost = 0.0;
    for (int j = 0; j < 5; ++j) landmark_cost += kEvalTime[j] * 10.0;

    data.manifest = {
        {"automl",
         {{"base_id", "automl"},
          {"planted_mean", automl_means},
          {"counts", counts},
          {"ok_records", 180},
          {"failed_records", 2},
          {"leaderboard", {"P0", "P1", "P3", "P2", "P4", "P5", "P6", "P7"}},
          {"leaderboard_excluding_d5", {"P0", "P1", "P2", "P3", "P4", "P5", "P6", "P7"}},
          {"flip", {{"held_out", "d5"}, {"pair", {"P2", "P3"}}}}}},
        {"default",
         {{"base_id", "default"},
          {"planted_mean", default_means},
          {"ok_records", 400},
          {"anti_correlated_dataset", "d3"}}},
        {"landmarkers", {"P0", "P1", "P2", "P3", "P4"}},
        {"landmark_cost", landmark_cost},
        {"neighbors",
         {{"d1", "d2"}, {"d2", "d1"}, {"d3", "d4"}, {"d4", "d3"}, {"d5", "d2"}}},
    };
    return data;
}

SurfaceData make_hierarchy_surface() {
    constexpr int kP = 30;
    constexpr int kD = 6;

    SurfaceData data;
    for (int g = 0; g < kP; ++g) {
        ComponentSpec spec;
        char buf[8];
        std::snprintf(buf, sizeof(buf), "Q%02d", g);
        spec.id = buf;
        spec.kind = ComponentKind::predictor;
        data.roster.predictors.push_back(spec);
    }
    for (int d = 0; d < kD; ++d) data.roster.datasets.push_back("s" + std::to_string(d + 1));

    // Per-dataset orders equal the global order except s5 and s6, whose best
    // predictor is the globally ninth-ranked specialist Q09. The best
    // predictor of a dataset stands out at 0.06; everyone else sits on a
    // 0.10 + 0.03 * rank ladder.
    std::map<std::pair<std::string, std::string>, SurrogateSurface::Cell> cells;
    nlohmann::json dataset_best = nlohmann::json::object();
    for (int d = 0; d < kD; ++d) {
        const std::string dataset = data.roster.datasets[d];
        const bool specialist = d >= 4;
        for (int g = 0; g < kP; ++g) {
            int rank = g;
            if (specialist) {
                if (g == 0)
                    rank = 9;
                else if (g == 9)
                    rank = 0;
            }
            SurrogateSurface::Cell cell;
            cell.base_error = rank == 0 ? 0.06 : 0.10 + 0.03 * rank;
            cell.noise_sigma = 0.02;
            cell.fold_cost = 1.0;
            cell.bowl_depth = 0.25;
            const std::string predictor = data.roster.predictors[g].id;
            std::uint64_t h = fnv1a(dataset + "/" + predictor);
            cell.bowl_center = 0.2 + 0.6 * (static_cast<double>(h >> 11) * 0x1.0p-53);
            cells[{dataset, predictor}] = cell;
        }
        dataset_best[dataset] = specialist ? "Q09" : "Q00";
    }
    data.surface = SurrogateSurface(10, 0.5, 15.0, std::move(cells));
    data.planted = {
        {"dataset_best", dataset_best},
        {"leaderboard_top4", {"Q01", "Q02", "Q00", "Q03"}},
        {"expected_chain", {"O-k4", "M-k4", "R-k4", "baseline"}},
    };
    return data;
}

void write_sample_files(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw input_error("cannot write sample file: " + name);
        out << content;
    };

    SampleData sample = make_sample_data();
    write("roster.json", roster_to_json(sample.roster));
    write("automl_meta.csv", records_to_csv(sample.automl_base()));
    write("default_meta.csv", records_to_csv(sample.default_base()));
    write("manifest.json", sample.manifest.dump(2) + "\n");

    SurfaceData surface = make_hierarchy_surface();
    nlohmann::json surface_json = nlohmann::json::parse(surface.surface.to_json());
    surface_json["planted"] = surface.planted;
    write("surface.json", surface_json.dump(2) + "\n");
    write("surface_roster.json", roster_to_json(surface.roster));
}

}  // namespace metareduce::synth
