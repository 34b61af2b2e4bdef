#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

#include "metareduce/meta_store.hpp"
#include "metareduce/synth.hpp"

using namespace metareduce;

namespace {

constexpr const char* kHeader =
    "base_id,dataset_id,predictor_id,pipeline,config_id,fold_index,error_rate,eval_time_s,status\n";

IngestResult ingest_text(const std::string& body, IngestOptions options = {},
                         const std::string& base_id = "b") {
    std::istringstream in(std::string(kHeader) + body);
    return ingest_csv(in, base_id, options);
}

EvaluationRecord ok_record(const std::string& dataset, const std::string& predictor, int fold,
                           double error, double time = 1.0,
                           std::vector<std::string> pipeline = {}) {
    EvaluationRecord r;
    r.base_id = "b";
    r.dataset_id = dataset;
    r.predictor_id = predictor;
    r.pipeline = pipeline.empty() ? std::vector<std::string>{predictor} : std::move(pipeline);
    r.config_id = "c" + std::to_string(fold);
    r.fold_index = fold;
    r.error_rate = error;
    r.eval_time_s = time;
    return r;
}

}  // namespace

TEST_SUITE("meta_store") {

TEST_CASE("empty stream with a declared roster keeps the full universe") {
    Roster roster;
    for (int i = 0; i < 30; ++i)
        roster.predictors.push_back({"P" + std::to_string(i), ComponentKind::predictor, {}});
    roster.datasets = {"d1"};
    IngestOptions options;
    options.roster = roster;
    auto result = ingest_text("", options);
    REQUIRE(result.rejects.empty());
    CHECK(result.base->predictor_universe().size() == 30);
    CHECK(result.base->records().empty());
    CHECK(result.base->aggregate("d1", "P7").penalty());
}

TEST_CASE("a single completed row aggregates to its own error") {
    auto result = ingest_text("b,d1,P0,P0,c0,3,0.25,1.5,ok\n");
    REQUIRE(result.rejects.empty());
    REQUIRE(result.base->records().size() == 1);
    auto agg = result.base->aggregate("d1", "P0");
    CHECK(agg.n_evaluations == 1);
    CHECK(agg.mean_error == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.best_error == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.mean_eval_time == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("bundled sample ingests with no rejects and a full grid") {
    std::ifstream in(std::string(METAREDUCE_SAMPLES_DIR) + "/automl_meta.csv");
    REQUIRE(in.good());
    IngestOptions options;
    options.roster = load_roster_file(std::string(METAREDUCE_SAMPLES_DIR) + "/roster.json");
    auto result = ingest_csv(in, "automl", options);
    CHECK(result.rejects.empty());
    CHECK(result.base->dataset_universe().size() == 5);
    CHECK(result.base->predictor_universe().size() == 8);
    auto manifest = synth::make_sample_data().manifest;
    CHECK(result.base->records().size() ==
          manifest["automl"]["ok_records"].get<std::size_t>() +
              manifest["automl"]["failed_records"].get<std::size_t>());
    for (const auto& d : result.base->dataset_universe())
        for (const auto& p : result.base->predictor_universe())
            CHECK(result.base->aggregate(d, p).n_evaluations > 0);
}

TEST_CASE("aggregate means and best over completed records") {
    std::vector<EvaluationRecord> records = {ok_record("d1", "P0", 0, 0.2),
                                             ok_record("d1", "P0", 1, 0.3),
                                             ok_record("d1", "P0", 2, 0.4)};
    MetaKnowledgeBase base("b", Flavor::opportunistic, 10, records, std::nullopt);
    auto agg = base.aggregate("d1", "P0");
    CHECK(agg.mean_error == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(agg.best_error == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(agg.n_evaluations == 3);
}

TEST_CASE("zero completed records takes the 1.0 penalty") {
    Roster roster;
    roster.predictors = {{"P0", ComponentKind::predictor, {}},
                         {"P1", ComponentKind::predictor, {}}};
    roster.datasets = {"d1"};
    std::vector<EvaluationRecord> records = {ok_record("d1", "P0", 0, 0.2)};
    EvaluationRecord failed;
    failed.base_id = "b";
    failed.dataset_id = "d1";
    failed.predictor_id = "P1";
    failed.pipeline = {"P1"};
    failed.config_id = "c0";
    failed.fold_index = 0;
    failed.eval_time_s = 3.0;
    failed.status = RecordStatus::failed;
    records.push_back(failed);
    MetaKnowledgeBase base("b", Flavor::opportunistic, 10, records, roster);
    auto agg = base.aggregate("d1", "P1");
    CHECK(agg.mean_error == 1.0);
    CHECK(agg.best_error == 1.0);
    CHECK(agg.n_evaluations == 0);
    CHECK(agg.n_failed == 1);  // failures are counted, never averaged
}

TEST_CASE("pipeline filters split single and multi component evaluations") {
    std::vector<EvaluationRecord> records = {
        ok_record("d1", "P0", 0, 0.5),
        ok_record("d1", "P0", 1, 0.1, 1.0, {"pre", "P0"}),
    };
    MetaKnowledgeBase base("b", Flavor::opportunistic, 10, records, std::nullopt);
    CHECK(base.aggregate("d1", "P0", PipelineFilter::single_only).mean_error ==
          doctest::Approx(0.5));
    CHECK(base.aggregate("d1", "P0", PipelineFilter::multi_only).mean_error ==
          doctest::Approx(0.1));
    CHECK(base.aggregate("d1", "P0", PipelineFilter::all).mean_error == doctest::Approx(0.3));

    auto all = base.aggregate("d1", "P0");
    auto single = base.aggregate("d1", "P0", PipelineFilter::single_only);
    auto multi = base.aggregate("d1", "P0", PipelineFilter::multi_only);
    CHECK(all.n_evaluations == single.n_evaluations + multi.n_evaluations);
}

TEST_CASE("filter count additivity holds across the bundled sample") {
    auto base = synth::make_sample_data().automl_base();
    for (const auto& d : base.dataset_universe())
        for (const auto& p : base.predictor_universe()) {
            auto all = base.aggregate(d, p);
            auto single = base.aggregate(d, p, PipelineFilter::single_only);
            auto multi = base.aggregate(d, p, PipelineFilter::multi_only);
            CHECK(all.n_evaluations == single.n_evaluations + multi.n_evaluations);
            CHECK(all.best_error <= all.mean_error);
        }
}

TEST_CASE("evaluation counts") {
    Roster roster;
    roster.predictors = {{"P0", ComponentKind::predictor, {}}};
    roster.datasets = {"d1"};
    MetaKnowledgeBase empty("b", Flavor::opportunistic, 10, {}, roster);
    auto zeros = evaluation_counts(empty);
    CHECK(zeros.at("d1", "P0") == 0);

    std::vector<EvaluationRecord> records = {ok_record("d1", "P0", 0, 0.1),
                                             ok_record("d1", "P0", 1, 0.2),
                                             ok_record("d1", "P0", 2, 0.3)};
    MetaKnowledgeBase base("b", Flavor::opportunistic, 10, records, roster);
    CHECK(evaluation_counts(base).at("d1", "P0") == 3);
}

TEST_CASE("bundled sample counts match the synthesizer manifest") {
    auto data = synth::make_sample_data();
    auto base = data.automl_base();
    auto counts = evaluation_counts(base);
    for (const auto& [dataset, row] : data.manifest["automl"]["counts"].items())
        for (const auto& [predictor, n] : row.items())
            CHECK(counts.at(dataset, predictor) == n.get<int>());
}

TEST_CASE("ingest, serialize, re-ingest is the identity on the record multiset") {
    auto data = synth::make_sample_data();
    auto base = data.automl_base();
    std::string csv = records_to_csv(base);
    std::istringstream in(csv);
    auto result = ingest_csv(in, "automl", {});
    REQUIRE(result.rejects.empty());

    auto key = [](const EvaluationRecord& r) {
        return std::make_tuple(r.dataset_id, r.predictor_id, r.config_id, r.fold_index,
                               r.error_rate.value_or(-1.0), r.eval_time_s,
                               r.status == RecordStatus::ok, r.pipeline);
    };
    std::vector<decltype(key(base.records()[0]))> a, b;
    for (const auto& r : base.records()) a.push_back(key(r));
    for (const auto& r : result.base->records()) b.push_back(key(r));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("aggregates are invariant under record order") {
    auto data = synth::make_sample_data();
    auto records = data.automl_records;
    std::mt19937 rng(7);
    std::shuffle(records.begin(), records.end(), rng);
    MetaKnowledgeBase shuffled("automl", Flavor::opportunistic, 10, records, data.roster);
    auto base = data.automl_base();
    for (const auto& d : base.dataset_universe())
        for (const auto& p : base.predictor_universe()) {
            auto x = base.aggregate(d, p);
            auto y = shuffled.aggregate(d, p);
            CHECK(x.mean_error == doctest::Approx(y.mean_error).epsilon(1e-15));
            CHECK(x.n_evaluations == y.n_evaluations);
        }
}

TEST_CASE("malformed rows are rejected with their line numbers") {
    auto result = ingest_text(
        "b,d1,P0,P0,c0,0,0.25,1.0,ok\n"
        "b,d1,P0,P0,c1,12,0.25,1.0,ok\n"     // fold outside [0, 9]
        "b,d1,P0,P1,c2,0,0.25,1.0,ok\n"      // pipeline does not end with predictor
        "b,d1,P0,P0,c3,0,1.25,1.0,ok\n"      // error above 1
        "b,d1,P0,P0,c4,0,,1.0,ok\n"          // ok without error
        "b,d1,P0,P0,c5,0,0.2,1.0,crashed\n"  // bad status
        "b,d1,P0,P0,c6,0,0.2,1.0,ok,extra\n");
    CHECK(result.base->records().size() == 1);
    REQUIRE(result.rejects.size() == 6);
    CHECK(result.rejects[0].row == 3);
    CHECK(result.rejects.back().row == 8);
}

TEST_CASE("conflicting duplicate completed evaluations signal a corrupted trace") {
    CHECK_THROWS_AS(ingest_text("b,d1,P0,P0,c0,0,0.25,1.0,ok\n"
                                "b,d1,P0,P0,c0,0,0.35,1.0,ok\n"),
                    input_error);
    // identical duplicates are legitimate multiset members
    auto result = ingest_text("b,d1,P0,P0,c0,0,0.25,1.0,ok\n"
                              "b,d1,P0,P0,c0,0,0.25,1.0,ok\n");
    CHECK(result.rejects.empty());
    CHECK(result.base->records().size() == 2);
}

TEST_CASE("systematic flavor allows one config and at most folds completed records") {
    IngestOptions options;
    options.flavor = Flavor::systematic;
    options.folds = 2;
    auto result = ingest_text(
        "b,d1,P0,P0,default,0,0.25,1.0,ok\n"
        "b,d1,P0,P0,default,1,0.30,1.0,ok\n"
        "b,d1,P0,P0,other,1,0.30,1.0,ok\n",  // second config
        options);
    CHECK(result.base->records().size() == 2);
    REQUIRE(result.rejects.size() == 1);
    CHECK(result.rejects[0].row == 4);
}

TEST_CASE("percent flag rescales error rates to fractions") {
    IngestOptions options;
    options.percent = true;
    auto result = ingest_text("b,d1,P0,P0,c0,0,25,1.0,ok\n", options);
    REQUIRE(result.rejects.empty());
    CHECK(result.base->aggregate("d1", "P0").mean_error == doctest::Approx(0.25));
}

TEST_CASE("crediting base learners adds mid-pipeline appearances to their cells") {
    auto data = synth::make_sample_data();
    auto plain = data.automl_base(false);
    auto credited = data.automl_base(true);
    // P6 hosts both the meta-predictor P5 and the kernel P7, so with the
    // flag on its cells also see those pipelines' records.
    auto p6_plain = plain.aggregate("d1", "P6");
    auto p6_credited = credited.aggregate("d1", "P6");
    CHECK(p6_credited.n_evaluations > p6_plain.n_evaluations);
    // predictors appearing nowhere mid-pipeline are untouched
    CHECK(credited.aggregate("d1", "P0").n_evaluations == plain.aggregate("d1", "P0").n_evaluations);
}

TEST_CASE("unknown identifiers are caller bugs") {
    auto base = synth::make_sample_data().automl_base();
    CHECK_THROWS_AS(base.aggregate("nope", "P0"), std::invalid_argument);
    CHECK_THROWS_AS(base.aggregate("d1", "nope"), std::invalid_argument);
}

TEST_CASE("jsonl ingestion accepts array and string pipelines") {
    std::istringstream in(
        R"({"base_id":"b","dataset_id":"d1","predictor_id":"P0","pipeline":["pre","P0"],"config_id":"c0","fold_index":0,"error_rate":0.2,"eval_time_s":1.0,"status":"ok"})"
        "\n"
        R"({"base_id":"b","dataset_id":"d1","predictor_id":"P0","pipeline":"P0","config_id":"c1","fold_index":1,"error_rate":0.4,"eval_time_s":1.0,"status":"ok"})"
        "\n"
        R"({"base_id":"b","dataset_id":"d1","predictor_id":"P1","pipeline":"P1","config_id":"c0","fold_index":0,"eval_time_s":2.0,"status":"failed"})"
        "\n");
    auto result = ingest_jsonl(in, "b", {});
    REQUIRE(result.rejects.empty());
    CHECK(result.base->records().size() == 3);
    CHECK(result.base->aggregate("d1", "P0").mean_error == doctest::Approx(0.3));
}

}  // TEST_SUITE
