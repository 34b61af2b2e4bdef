// metareduce: build predictor-performance meta-knowledge bases from
// evaluation traces, derive search-space reduction strategies, quantify
// dataset challenge, compute expectation baselines, and evaluate strategies
// against a simulated budgeted pipeline search.
//
// One subcommand per pipeline stage; every output is a CSV/JSON report and
// byte-identical across reruns with the same inputs and seeds.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "metareduce/challenge.hpp"
#include "metareduce/config_space.hpp"
#include "metareduce/csv.hpp"
#include "metareduce/expectation.hpp"
#include "metareduce/harness.hpp"
#include "metareduce/landmarking.hpp"
#include "metareduce/meta_store.hpp"
#include "metareduce/ranking.hpp"

namespace fs = std::filesystem;
using namespace metareduce;

namespace {

// Buffers every report so a failing command leaves no partial files behind.
class OutputSet {
public:
    void add(const std::string& name, std::string content) {
        files_[name] = std::move(content);
    }

    void write_all(const std::string& out_dir) const {
        fs::create_directories(out_dir);
        for (const auto& [name, content] : files_) {
            fs::path path = fs::path(out_dir) / name;
            std::ofstream out(path, std::ios::binary);
            if (!out) throw input_error("cannot write " + path.string());
            out << content;
        }
    }

private:
    std::map<std::string, std::string> files_;
};

std::string opt_str(const std::optional<double>& v) {
    return v ? format_report(*v) : "";
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string part;
    for (char c : s) {
        if (c == sep) {
            if (!part.empty()) out.push_back(part);
            part.clear();
        } else {
            part += c;
        }
    }
    if (!part.empty()) out.push_back(part);
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& token : split_list(text)) {
        auto range = token.find("..");
        if (range != std::string::npos) {
            auto lo = parse_int(token.substr(0, range));
            auto hi = parse_int(token.substr(range + 2));
            if (!lo || !hi || *lo < 0 || *hi < *lo)
                throw input_error("bad seed range: " + token);
            for (long long s = *lo; s <= *hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
        } else {
            auto v = parse_int(token);
            if (!v || *v < 0) throw input_error("bad seed: " + token);
            seeds.push_back(static_cast<std::uint64_t>(*v));
        }
    }
    if (seeds.empty()) throw input_error("seed list is empty");
    return seeds;
}

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& token : split_list(text)) {
        auto v = parse_int(token);
        if (!v || *v < 1) throw input_error("bad k value: " + token);
        out.push_back(static_cast<int>(*v));
    }
    if (out.empty()) throw input_error("k list is empty");
    return out;
}

struct BaseArgs {
    std::string path;
    std::string base_id;  // inferred from the file when empty
    std::string flavor = "opportunistic";
    int folds = 10;
    bool percent = false;
    bool credit_base_learners = false;
    bool allow_rejects = false;
};

void add_base_options(CLI::App* cmd, BaseArgs& args, const std::string& prefix = "",
                      bool required = true) {
    std::string dash = "--" + prefix;
    auto env = [&](std::string name) {
        std::string full = "METAREDUCE_" + prefix + name;
        for (auto& c : full) c = c == '-' ? '_' : std::toupper(static_cast<unsigned char>(c));
        return full;
    };
    auto* opt = cmd->add_option(dash + "base", args.path, "record file (.csv or .jsonl)")
                    ->envname(env("base"));
    if (prefix.empty() && required) opt->required();
    cmd->add_option(dash + "base-id", args.base_id, "base id (default: first row's)")
        ->envname(env("base-id"));
    cmd->add_option(dash + "flavor", args.flavor, "opportunistic or systematic")
        ->envname(env("flavor"));
    cmd->add_option(dash + "folds", args.folds, "CV fold count")->envname(env("folds"));
    cmd->add_flag(dash + "percent", args.percent, "error column is 0..100");
    if (prefix.empty()) {
        cmd->add_flag("--credit-base-learners", args.credit_base_learners,
                      "credit predictors appearing mid-pipeline");
        cmd->add_flag("--allow-rejects", args.allow_rejects,
                      "keep going when rows are rejected");
    }
}

std::string infer_base_id(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open record file: " + path);
    std::string header, first;
    if (!std::getline(in, header) || !std::getline(in, first))
        throw input_error("record file has no data rows: " + path);
    for (const std::string* line : {&header, &first}) {
        if (!line->empty() && (*line)[0] == '{') {
            auto j = nlohmann::json::parse(*line, nullptr, false);
            if (!j.is_discarded() && j.contains("base_id")) return j["base_id"].get<std::string>();
        }
    }
    auto fields = csv::split_line(first);
    if (fields.empty() || fields[0].empty())
        throw input_error("cannot infer base id from " + path + "; pass --base-id");
    return fields[0];
}

MetaKnowledgeBase load_base(const BaseArgs& args, const std::optional<Roster>& roster) {
    IngestOptions options;
    options.flavor = flavor_from_string(args.flavor);
    options.folds = args.folds;
    options.percent = args.percent;
    options.credit_base_learners = args.credit_base_learners;
    options.roster = roster;
    std::string base_id = args.base_id.empty() ? infer_base_id(args.path) : args.base_id;
    auto result = ingest_file(args.path, base_id, options);
    if (!result.rejects.empty()) {
        for (const auto& r : result.rejects)
            std::cerr << args.path << ":" << r.row << ": " << r.message << "\n";
        if (!args.allow_rejects)
            throw input_error(std::to_string(result.rejects.size()) + " rejected row(s) in " +
                              args.path);
    }
    return std::move(*result.base);
}

std::optional<Roster> load_roster_opt(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return load_roster_file(path);
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

std::string rankings_csv(const RankingTable& table) {
    std::string out = "dataset,predictor,mean_error,rank\n";
    for (const auto& d : table.datasets())
        for (const auto& p : table.predictors())
            out += csv::join_line({d, p, format_report(table.mean_error(d, p)),
                                   format_report(table.rank(d, p))}) +
                   "\n";
    return out;
}

std::string leaderboard_csv(const std::vector<LeaderboardEntry>& leaderboard) {
    std::string out = "predictor,avg_rank,position\n";
    for (std::size_t i = 0; i < leaderboard.size(); ++i)
        out += csv::join_line({leaderboard[i].predictor_id,
                               format_report(leaderboard[i].average_rank),
                               std::to_string(i + 1)}) +
               "\n";
    return out;
}

std::string matrix_csv(const IndistinguishabilityMatrix& m) {
    std::string out = "predictor";
    for (const auto& p : m.order) out += "," + p;
    out += "\n";
    for (std::size_t i = 0; i < m.order.size(); ++i) {
        out += m.order[i];
        for (std::size_t j = 0; j < m.order.size(); ++j)
            out += "," + std::to_string(m.cells[i][j]);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const BaseArgs& base_args, const std::string& roster_path,
               const std::string& out_dir) {
    auto base = load_base(base_args, load_roster_opt(roster_path));
    auto counts = evaluation_counts(base);

    OutputSet outputs;
    auto d_order = counts.datasets_by_total();
    auto p_order = counts.predictors_by_total();
    std::string counts_csv = "dataset";
    for (auto p : p_order) counts_csv += "," + counts.predictors[p];
    counts_csv += ",total\n";
    for (auto d : d_order) {
        counts_csv += counts.datasets[d];
        for (auto p : p_order) counts_csv += "," + std::to_string(counts.counts[d][p]);
        counts_csv += "," + std::to_string(counts.dataset_total(d)) + "\n";
    }
    outputs.add("counts.csv", counts_csv);
    outputs.add("records_normalized.csv", records_to_csv(base));
    outputs.write_all(out_dir);

    std::printf("ingested %zu records into base '%s' (%zu datasets x %zu predictors)\n",
                base.records().size(), base.base_id().c_str(), base.dataset_universe().size(),
                base.predictor_universe().size());
    return 0;
}

int cmd_rank(const BaseArgs& base_args, const BaseArgs& base2_args,
             const std::string& roster_path, const std::string& filter_name,
             const std::string& key_name, bool drop_penalty_cells, const std::string& subset_arg,
             const std::string& out_dir) {
    auto roster = load_roster_opt(roster_path);
    auto base = load_base(base_args, roster);
    RankingOptions options;
    options.filter = pipeline_filter_from_string(filter_name);
    if (key_name != "best" && key_name != "mean")
        throw input_error("--key must be mean or best");
    options.key = key_name == "best" ? RankingKey::best_error : RankingKey::mean_error;
    auto table = build_ranking(base, options);

    OutputSet outputs;
    outputs.add("rankings.csv", rankings_csv(table));
    outputs.add("leaderboard.csv", leaderboard_csv(table.leaderboard()));

    if (!base2_args.path.empty()) {
        auto base2 = load_base(base2_args, roster);
        std::vector<std::string> subset;
        std::string subset_label = "all";
        if (!subset_arg.empty()) {
            subset = split_list(subset_arg);
            subset_label = "subset";
        } else {
            for (const auto& p : base.predictor_universe())
                if (base2.has_predictor(p)) subset.push_back(p);
        }
        CrossBaseOptions xopts;
        xopts.filter = options.filter;
        xopts.drop_penalty_cells = drop_penalty_cells;
        auto report = cross_base_correlations(base, base2, subset, xopts);
        std::string corr = "dataset,rank_corr,error_corr,subset_label\n";
        for (const auto& row : report.per_dataset)
            corr += csv::join_line({row.dataset_id, opt_str(row.rank_corr),
                                    opt_str(row.error_corr), subset_label}) +
                    "\n";
        corr += csv::join_line({"leaderboard", opt_str(report.leaderboard_rank_corr), "",
                                subset_label}) +
                "\n";
        outputs.add("correlations.csv", corr);
    }
    outputs.write_all(out_dir);
    return 0;
}

int cmd_similar(const BaseArgs& base_args, const std::string& roster_path, int landmarker_count,
                const std::string& out_dir) {
    auto base = load_base(base_args, load_roster_opt(roster_path));
    auto landmarkers = select_landmarkers(base, landmarker_count);

    std::string out = "new_dataset,most_similar,coefficient,landmark_cost_s\n";
    for (const auto& d : base.dataset_universe()) {
        auto profile = landmark_profile(base, d, landmarkers);
        if (profile.unsolvable) {
            out += csv::join_line({d, "", "", ""}) + "\n";  // results stay blank
            continue;
        }
        std::vector<LandmarkProfile> priors;
        for (const auto& other : base.dataset_universe())
            if (other != d) priors.push_back(landmark_profile(base, other, landmarkers));
        try {
            auto sim = most_similar_dataset(profile, priors);
            out += csv::join_line({d, sim.dataset_id, format_report(sim.coefficient),
                                   format_report(profile.total_landmark_cost)}) +
                   "\n";
        } catch (const degenerate_input&) {
            out += csv::join_line({d, "", "", format_report(profile.total_landmark_cost)}) + "\n";
        }
    }
    OutputSet outputs;
    outputs.add("similarity.csv", out);
    outputs.write_all(out_dir);
    return 0;
}

int cmd_challenge(const BaseArgs& base_args, const BaseArgs& base2_args,
                  const std::string& roster_path, double alpha, const std::string& k_arg,
                  const std::string& out_dir) {
    auto roster = load_roster_opt(roster_path);
    auto base = load_base(base_args, roster);
    std::optional<MetaKnowledgeBase> base2;
    if (!base2_args.path.empty()) base2 = load_base(base2_args, roster);
    auto k_grid = parse_k_list(k_arg);

    OutputSet outputs;
    // Group sizes follow the systematic base when one is supplied.
    const MetaKnowledgeBase& group_source = base2 ? *base2 : base;
    const int roster_size = static_cast<int>(base.predictor_universe().size());

    std::string header = "dataset,skewness_" + base.base_id();
    if (base2) header += ",skewness_" + base2->base_id();
    header += ",best_group_size,second_group_size";
    for (int k : k_grid)
        if (k <= roster_size) header += ",hit_prob_k" + std::to_string(k);
    std::string challenge_csv = header + "\n";

    auto skew_of = [](const MetaKnowledgeBase& b, const std::string& d) -> std::string {
        std::vector<double> means;
        for (const auto& p : b.predictor_universe())
            means.push_back(b.aggregate(d, p).mean_error);
        try {
            return format_report(skewness(means));
        } catch (const degenerate_input&) {
            return "";
        }
    };

    MatrixOptions mopts;
    mopts.alpha = alpha;
    for (const auto& d : base.dataset_universe()) {
        std::vector<std::string> row = {d, skew_of(base, d)};
        if (base2) row.push_back(base2->has_dataset(d) ? skew_of(*base2, d) : "");
        auto matrix = indistinguishability_matrix(group_source, d, mopts);
        auto groups = best_groups(matrix);
        row.push_back(std::to_string(groups.best_group_size));
        row.push_back(std::to_string(groups.group_size(1)));
        for (int k : k_grid) {
            if (k > roster_size) continue;
            if (groups.best_group_size > 0)
                row.push_back(format_report(
                    random_top_hit_probability(roster_size, groups.best_group_size, k)));
            else
                row.push_back("");
        }
        challenge_csv += csv::join_line(row) + "\n";

        auto m1 = indistinguishability_matrix(base, d, mopts);
        outputs.add("matrix_" + base.base_id() + "_" + d + ".csv", matrix_csv(m1));
        if (base2 && base2->has_dataset(d)) {
            auto m2 = indistinguishability_matrix(*base2, d, mopts);
            outputs.add("matrix_" + base2->base_id() + "_" + d + ".csv", matrix_csv(m2));
        }
    }
    outputs.add("challenge.csv", challenge_csv);
    outputs.write_all(out_dir);
    return 0;
}

int cmd_expect(const BaseArgs& base_args, const std::string& roster_path,
               const std::string& k_arg, int landmarker_count, bool include_closure,
               const std::string& filter_name, const std::string& dataset_filter,
               const std::string& out_dir) {
    auto roster_opt = load_roster_opt(roster_path);
    auto base = load_base(base_args, roster_opt);
    Roster roster;
    if (roster_opt) {
        roster = *roster_opt;
    } else {
        for (const auto& p : base.predictor_universe())
            roster.predictors.push_back({p, ComponentKind::predictor, std::nullopt});
        roster.datasets.assign(base.dataset_universe().begin(), base.dataset_universe().end());
    }
    auto k_grid = parse_k_list(k_arg);
    RankingOptions ropts;
    ropts.filter = pipeline_filter_from_string(filter_name);
    auto table = build_ranking(base, ropts);
    auto landmarkers = select_landmarkers(base, landmarker_count);

    std::string expectation_csv =
        "base,dataset,k,eO_avg,eO_opt,R_avg,R_opt,eM_avg,eM_opt,eL_avg,eL_opt,"
        "norm_M_avg,norm_M_opt,norm_L_avg,norm_L_opt\n";
    std::string normalized_csv = "base,dataset,k,strategy,metric,value\n";

    if (!dataset_filter.empty() && !table.has_dataset(dataset_filter))
        throw input_error("unknown dataset: " + dataset_filter);
    const int universe = static_cast<int>(table.predictors().size());
    for (const auto& d : table.datasets()) {
        if (!dataset_filter.empty() && d != dataset_filter) continue;
        auto mean_map = table.dataset_mean_map(d);
        std::vector<double> means;
        for (const auto& p : table.predictors()) means.push_back(mean_map.at(p));

        std::optional<LandmarkResult> landmark;
        auto profile = landmark_profile(base, d, landmarkers);
        if (!profile.unsolvable) {
            std::vector<LandmarkProfile> priors;
            for (const auto& other : base.dataset_universe())
                if (other != d) priors.push_back(landmark_profile(base, other, landmarkers));
            try {
                auto sim = most_similar_dataset(profile, priors);
                landmark = LandmarkResult{sim.dataset_id, sim.coefficient,
                                          profile.total_landmark_cost};
            } catch (const degenerate_input&) {
            }
        }

        for (int k : k_grid) {
            if (k > universe) continue;
            ExpectationRow row;
            row.k = k;
            row.oracle_average = expected_oracle_average(means, k);
            row.oracle_optimal = expected_oracle_average(means, 1);
            row.random_average = expected_random_average(means, k);
            row.random_optimal = expected_random_optimal(means, k);

            auto pool_means = [&](const ReducedSpace& space) {
                std::vector<double> out;
                auto members = include_closure ? space.search_pool() : space.predictor_pool;
                for (const auto& p : members) out.push_back(mean_map.at(p));
                return out;
            };
            StrategyInputs inputs;
            inputs.target_dataset = d;
            auto m_space = apply_strategy("M-k" + std::to_string(k), table, roster, inputs);
            auto m_exp = strategy_expectations(pool_means(m_space));
            row.leaderboard_average = m_exp.average;
            row.leaderboard_optimal = m_exp.optimal;
            row.norm_leaderboard_average =
                normalize(m_exp.average, row.oracle_average, row.random_average);
            row.norm_leaderboard_optimal =
                normalize(m_exp.optimal, row.oracle_optimal, row.random_optimal);
            if (landmark) {
                inputs.landmark = landmark;
                auto l_space = apply_strategy("L-k" + std::to_string(k), table, roster, inputs);
                auto l_exp = strategy_expectations(pool_means(l_space));
                row.landmarked_average = l_exp.average;
                row.landmarked_optimal = l_exp.optimal;
                row.norm_landmarked_average =
                    normalize(l_exp.average, row.oracle_average, row.random_average);
                row.norm_landmarked_optimal =
                    normalize(l_exp.optimal, row.oracle_optimal, row.random_optimal);
            }

            expectation_csv +=
                csv::join_line({base.base_id(), d, std::to_string(k),
                                format_report(row.oracle_average),
                                format_report(row.oracle_optimal),
                                format_report(row.random_average),
                                format_report(row.random_optimal),
                                opt_str(row.leaderboard_average), opt_str(row.leaderboard_optimal),
                                opt_str(row.landmarked_average), opt_str(row.landmarked_optimal),
                                opt_str(row.norm_leaderboard_average),
                                opt_str(row.norm_leaderboard_optimal),
                                opt_str(row.norm_landmarked_average),
                                opt_str(row.norm_landmarked_optimal)}) +
                "\n";
            for (const auto& [strategy, metric, value] :
                 {std::tuple{"eM", "avg", row.norm_leaderboard_average},
                  std::tuple{"eM", "opt", row.norm_leaderboard_optimal},
                  std::tuple{"eL", "avg", row.norm_landmarked_average},
                  std::tuple{"eL", "opt", row.norm_landmarked_optimal}})
                normalized_csv += csv::join_line({base.base_id(), d, std::to_string(k), strategy,
                                                  metric, opt_str(value)}) +
                                  "\n";
        }
    }
    OutputSet outputs;
    outputs.add("expectation.csv", expectation_csv);
    outputs.add("normalized.csv", normalized_csv);
    outputs.write_all(out_dir);
    return 0;
}

std::map<std::string, Pipeline> load_r30_manifest(const std::string& path) {
    std::map<std::string, Pipeline> out;
    if (path.empty()) return out;
    std::ifstream in(path);
    if (!in) throw input_error("cannot open r30 manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("r30 manifest is not valid JSON: ") + e.what());
    }
    for (const auto& [dataset, value] : j.items()) {
        Pipeline p;
        if (value.is_array())
            p.components = value.get<std::vector<std::string>>();
        else
            p.components = split_list(value.get<std::string>(), '|');
        out[dataset] = std::move(p);
    }
    return out;
}

int cmd_simulate(const BaseArgs& base_args, const std::string& surface_path,
                 const std::string& roster_path, const std::string& strategies_arg,
                 const std::string& seeds_arg, double budget, double alpha,
                 const std::string& failure_policy, const std::string& r30_path,
                 const std::string& filter_name, const std::string& out_dir) {
    if (surface_path.empty() && base_args.path.empty())
        throw input_error("simulate needs --surface (surrogate) or --base (replay)");

    SimulationConfig config;
    for (const auto& label : split_list(strategies_arg))
        config.strategies.push_back(parse_strategy_label(label));
    if (config.strategies.empty()) throw input_error("no strategies requested");
    config.seeds = parse_seed_list(seeds_arg);
    config.budget.total_cost = budget;
    config.budget.folds = 0;  // inherit the surface's fold count
    config.budget.runs_per_strategy = static_cast<int>(config.seeds.size());
    config.alpha = alpha;
    if (failure_policy == "penalize")
        config.failure_policy = FailurePolicy::penalize;
    else if (failure_policy == "drop")
        config.failure_policy = FailurePolicy::drop;
    else
        throw input_error("--failure-policy must be penalize or drop");
    config.r30_pipelines = load_r30_manifest(r30_path);

    auto roster_opt = load_roster_opt(roster_path);
    std::optional<MetaKnowledgeBase> base;
    std::optional<SurrogateSurface> surrogate;
    std::optional<ReplaySurface> replay;
    std::optional<RankingTable> rankings;

    if (!surface_path.empty()) {
        surrogate = SurrogateSurface::from_file(surface_path);
        rankings = surrogate->planted_rankings();
    }
    if (!base_args.path.empty()) {
        base = load_base(base_args, roster_opt);
        if (!surrogate) {
            replay.emplace(*base);
            RankingOptions ropts;
            ropts.filter = pipeline_filter_from_string(filter_name);
            rankings = build_ranking(*base, ropts);
        }
    }
    Roster roster;
    if (roster_opt) {
        roster = *roster_opt;
    } else {
        for (const auto& p : rankings->predictors())
            roster.predictors.push_back({p, ComponentKind::predictor, std::nullopt});
        roster.datasets = rankings->datasets();
    }

    const ResponseSurface& surface =
        surrogate ? static_cast<const ResponseSurface&>(*surrogate)
                  : static_cast<const ResponseSurface&>(*replay);
    auto result = simulate(config, surface, *rankings, roster, base ? &*base : nullptr);

    OutputSet outputs;
    std::string runs = "strategy,dataset,run,status,mean_cv_error,cost_spent,pipeline\n";
    for (const auto& o : result.outcomes)
        runs += csv::join_line(
                    {o.strategy_label, o.dataset_id, std::to_string(o.run_index),
                     o.status == RunStatus::completed ? "completed" : "failed",
                     o.status == RunStatus::completed ? format_report(o.mean_best_error()) : "",
                     format_report(o.cost_spent),
                     o.status == RunStatus::completed ? o.best_pipeline.joined() : ""}) +
                "\n";
    outputs.add("runs.csv", runs);

    std::string cons = "strategy,dataset,consistency,failures,mean_best_error\n";
    for (const auto& c : result.report.per_cell)
        cons += csv::join_line({c.strategy_label, c.dataset_id, format_report(c.consistency),
                                std::to_string(c.failure_count),
                                format_report(c.mean_best_error)}) +
                "\n";
    outputs.add("consistency.csv", cons);

    std::string ranks = "strategy,avg_rank\n";
    for (const auto& [strategy, rank] : result.report.average_rank)
        ranks += csv::join_line({strategy, format_report(rank)}) + "\n";
    outputs.add("strategy_ranks.csv", ranks);

    nlohmann::json nem;
    nem["cd"] = result.report.nemenyi.cd_value;
    nem["alpha"] = result.report.nemenyi.alpha;
    nem["n_strategies"] = result.report.nemenyi.n_strategies;
    nem["n_datasets"] = result.report.nemenyi.n_datasets;
    nem["significant_pairs"] = nlohmann::json::array();
    for (const auto& pair : result.report.nemenyi.significant_pairs)
        nem["significant_pairs"].push_back(
            {{"a", pair.strategy_a}, {"b", pair.strategy_b}, {"gap", pair.gap}});
    outputs.add("nemenyi.json", nem.dump(2) + "\n");
    outputs.write_all(out_dir);

    std::printf("simulated %zu strategies x %d datasets x %zu runs\n", config.strategies.size(),
                result.report.nemenyi.n_datasets, config.seeds.size());
    return 0;
}

int cmd_report(const std::string& out_dir) {
    auto read_table = [&](const std::string& name) {
        std::ifstream in(fs::path(out_dir) / name);
        if (!in) throw input_error("missing " + name + " in " + out_dir + "; run simulate first");
        return csv::read(in);
    };
    auto cons = read_table("consistency.csv");
    auto ranks = read_table("strategy_ranks.csv");

    StrategyRunReport report;
    int c_strategy = cons.column("strategy"), c_dataset = cons.column("dataset");
    int c_cons = cons.column("consistency"), c_fail = cons.column("failures");
    int c_err = cons.column("mean_best_error");
    if (c_strategy < 0 || c_dataset < 0 || c_cons < 0 || c_fail < 0 || c_err < 0)
        throw input_error("consistency.csv has unexpected columns");
    for (const auto& row : cons.rows) {
        StrategyDatasetReport cell;
        cell.strategy_label = row[c_strategy];
        cell.dataset_id = row[c_dataset];
        cell.consistency = parse_double(row[c_cons]).value_or(0.0);
        cell.failure_count = static_cast<int>(parse_int(row[c_fail]).value_or(0));
        cell.mean_best_error = parse_double(row[c_err]).value_or(1.0);
        report.per_cell.push_back(std::move(cell));
    }
    int r_strategy = ranks.column("strategy"), r_rank = ranks.column("avg_rank");
    if (r_strategy < 0 || r_rank < 0)
        throw input_error("strategy_ranks.csv has unexpected columns");
    for (const auto& row : ranks.rows)
        report.average_rank[row[r_strategy]] = parse_double(row[r_rank]).value_or(0.0);

    std::string agg = "grouping,group,mean_consistency,mean_failures,mean_rank,n_strategies\n";
    for (auto [grouping, name] : {std::pair{Grouping::strategy_type, "strategy_type"},
                                  std::pair{Grouping::base, "base"}, std::pair{Grouping::k, "k"}})
        for (const auto& row : aggregate_report(report, grouping))
            agg += csv::join_line({name, row.group, format_report(row.mean_consistency),
                                   format_report(row.mean_failures), format_report(row.mean_rank),
                                   std::to_string(row.n_strategies)}) +
                   "\n";

    nlohmann::json summary;
    summary["n_strategies"] = report.average_rank.size();
    summary["n_cells"] = report.per_cell.size();
    std::string best_strategy;
    double best_rank = std::numeric_limits<double>::infinity();
    for (const auto& [strategy, rank] : report.average_rank)
        if (rank < best_rank) {
            best_rank = rank;
            best_strategy = strategy;
        }
    summary["best_strategy"] = best_strategy;
    summary["best_avg_rank"] = best_rank;

    OutputSet outputs;
    outputs.add("aggregates.csv", agg);
    outputs.add("summary.json", summary.dump(2) + "\n");
    outputs.write_all(out_dir);
    return 0;
}

// Fills unset options from a JSON config file; flags beat environment
// variables beat the file.
void apply_config_defaults(std::vector<std::string>& args) {
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") config_path = args[i + 1];
    if (config_path.empty())
        if (const char* env = std::getenv("METAREDUCE_CONFIG")) config_path = env;
    if (config_path.empty()) return;

    std::ifstream in(config_path);
    if (!in) throw input_error("cannot open config file: " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("config file is not valid JSON: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args)
            if (a == flag) present = true;
        std::string env_name = "METAREDUCE_" + key;
        for (auto& c : env_name) c = c == '-' ? '_' : std::toupper(static_cast<unsigned char>(c));
        if (present || std::getenv(env_name.c_str())) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_string()) {
            args.push_back(flag);
            args.push_back(value.get<std::string>());
        } else {
            args.push_back(flag);
            args.push_back(value.dump());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meta-knowledge driven configuration-space reduction toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags > env > file)");

    std::string out_dir = ".";
    app.add_option("--out", out_dir, "output directory")->envname("METAREDUCE_OUT");

    BaseArgs base_args, base2_args;
    std::string roster_path, surface_path, r30_path;
    std::string filter_name = "all", key_name = "mean";
    std::string strategies_arg, seeds_arg = "1..5";
    std::string k_arg = "1,4,8,10,19,30";
    std::string failure_policy = "penalize", subset_arg, dataset_filter;
    double alpha = 0.05, budget = 100.0;
    int landmarker_count = kDefaultLandmarkerCount;
    bool drop_penalty_cells = false, include_closure = false;

    auto* ingest = app.add_subcommand("ingest", "validate a trace and emit evaluation counts");
    add_base_options(ingest, base_args);
    ingest->add_option("--roster", roster_path, "roster manifest JSON")
        ->envname("METAREDUCE_ROSTER");

    auto* rank = app.add_subcommand("rank", "per-dataset rankings and the global leaderboard");
    add_base_options(rank, base_args);
    add_base_options(rank, base2_args, "base2-");
    rank->add_option("--roster", roster_path, "roster manifest JSON")->envname("METAREDUCE_ROSTER");
    rank->add_option("--filter", filter_name, "all, single_only or multi_only")
        ->envname("METAREDUCE_FILTER");
    rank->add_option("--key", key_name, "ranking key: mean or best");
    rank->add_flag("--drop-penalty-cells", drop_penalty_cells,
                   "exclude unevaluated cells from correlations");
    rank->add_option("--subset", subset_arg, "predictor subset for cross-base correlations");

    auto* similar = app.add_subcommand("similar", "landmark profiles and nearest datasets");
    add_base_options(similar, base_args);
    similar->add_option("--roster", roster_path, "roster manifest JSON")
        ->envname("METAREDUCE_ROSTER");
    similar->add_option("--landmarkers", landmarker_count, "number of landmarkers");

    auto* challenge = app.add_subcommand("challenge", "skewness, matrices and hit odds");
    add_base_options(challenge, base_args);
    add_base_options(challenge, base2_args, "base2-");
    challenge->add_option("--roster", roster_path, "roster manifest JSON")
        ->envname("METAREDUCE_ROSTER");
    challenge->add_option("--alpha", alpha, "significance level")->envname("METAREDUCE_ALPHA");
    challenge->add_option("--k", k_arg, "k grid")->envname("METAREDUCE_K");

    auto* expect = app.add_subcommand("expect", "expected oracle/random baselines per k");
    add_base_options(expect, base_args);
    expect->add_option("--roster", roster_path, "roster manifest JSON")
        ->envname("METAREDUCE_ROSTER");
    expect->add_option("--k", k_arg, "k grid")->envname("METAREDUCE_K");
    expect->add_option("--landmarkers", landmarker_count, "number of landmarkers");
    expect->add_option("--filter", filter_name, "pipeline filter")->envname("METAREDUCE_FILTER");
    expect->add_option("--dataset", dataset_filter, "restrict the report to one dataset");
    expect->add_flag("--include-closure", include_closure,
                     "count closure-added predictors in pool expectations");

    auto* simulate_cmd = app.add_subcommand("simulate", "budgeted search over reduced spaces");
    add_base_options(simulate_cmd, base_args, "", false);
    simulate_cmd->add_option("--surface", surface_path, "surrogate surface manifest JSON")
        ->envname("METAREDUCE_SURFACE");
    simulate_cmd->add_option("--roster", roster_path, "roster manifest JSON")
        ->envname("METAREDUCE_ROSTER");
    simulate_cmd->add_option("--strategies", strategies_arg, "comma-separated strategy labels")
        ->required()
        ->envname("METAREDUCE_STRATEGIES");
    simulate_cmd->add_option("--seeds", seeds_arg, "seed list, e.g. 1..5 or 3,7,9")
        ->envname("METAREDUCE_SEEDS");
    simulate_cmd->add_option("--budget", budget, "total cost units per run")
        ->envname("METAREDUCE_BUDGET");
    simulate_cmd->add_option("--alpha", alpha, "significance level")->envname("METAREDUCE_ALPHA");
    simulate_cmd->add_option("--failure-policy", failure_policy, "penalize or drop")
        ->envname("METAREDUCE_FAILURE_POLICY");
    simulate_cmd->add_option("--r30", r30_path, "JSON map of dataset to prior-best pipeline");
    simulate_cmd->add_option("--filter", filter_name, "pipeline filter for replay rankings")
        ->envname("METAREDUCE_FILTER");

    auto* report = app.add_subcommand("report", "aggregate simulate outputs in --out");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        apply_config_defaults(args);
        std::vector<const char*> cargs = {argv[0]};
        for (const auto& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), const_cast<char**>(cargs.data()));
        } catch (const CLI::ParseError& e) {
            int code = app.exit(e);
            return code == 0 ? 0 : 1;
        }

        if (ingest->parsed()) return cmd_ingest(base_args, roster_path, out_dir);
        if (rank->parsed())
            return cmd_rank(base_args, base2_args, roster_path, filter_name, key_name,
                            drop_penalty_cells, subset_arg, out_dir);
        if (similar->parsed())
            return cmd_similar(base_args, roster_path, landmarker_count, out_dir);
        if (challenge->parsed())
            return cmd_challenge(base_args, base2_args, roster_path, alpha, k_arg, out_dir);
        if (expect->parsed())
            return cmd_expect(base_args, roster_path, k_arg, landmarker_count, include_closure,
                              filter_name, dataset_filter, out_dir);
        if (simulate_cmd->parsed())
            return cmd_simulate(base_args, surface_path, roster_path, strategies_arg, seeds_arg,
                                budget, alpha, failure_policy, r30_path, filter_name, out_dir);
        if (report->parsed()) return cmd_report(out_dir);
        return 1;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const degenerate_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
