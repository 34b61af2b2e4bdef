#include "metareduce/config_space.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "metareduce/ranking.hpp"

namespace metareduce {

std::string to_string(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::predictor: return "predictor";
        case ComponentKind::meta_predictor: return "meta_predictor";
        case ComponentKind::kernel: return "kernel";
        case ComponentKind::preprocessor: return "preprocessor";
    }
    return "predictor";
}

ComponentKind component_kind_from_string(const std::string& s) {
    if (s == "predictor") return ComponentKind::predictor;
    if (s == "meta_predictor") return ComponentKind::meta_predictor;
    if (s == "kernel") return ComponentKind::kernel;
    if (s == "preprocessor") return ComponentKind::preprocessor;
    throw input_error("unknown component kind: " + s);
}

const ComponentSpec* Roster::find(const std::string& id) const {
    for (const auto& c : predictors)
        if (c.id == id) return &c;
    return nullptr;
}

std::vector<std::string> Roster::predictor_ids() const {
    std::vector<std::string> out;
    out.reserve(predictors.size());
    for (const auto& c : predictors) out.push_back(c.id);
    return out;
}

std::set<std::string> Roster::predictor_id_set() const {
    std::set<std::string> out;
    for (const auto& c : predictors) out.insert(c.id);
    return out;
}

Roster load_roster_json(const std::string& text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string("roster manifest is not valid JSON: ") + e.what());
    }
    Roster roster;
    if (!j.contains("predictors") || !j["predictors"].is_array())
        throw input_error("roster manifest needs a 'predictors' array");
    for (const auto& item : j["predictors"]) {
        ComponentSpec spec;
        spec.id = item.value("id", "");
        if (spec.id.empty()) throw input_error("roster predictor entry missing id");
        spec.kind = component_kind_from_string(item.value("kind", "predictor"));
        if (spec.kind == ComponentKind::preprocessor)
            throw input_error("preprocessors belong in the 'preprocessors' array: " + spec.id);
        if (item.contains("host")) spec.host = item["host"].get<std::string>();
        if (spec.kind == ComponentKind::kernel && !spec.host)
            throw input_error("kernel '" + spec.id + "' must declare its host predictor");
        if (spec.kind != ComponentKind::kernel && spec.host)
            throw input_error("only kernels declare a host: " + spec.id);
        roster.predictors.push_back(std::move(spec));
    }
    if (j.contains("preprocessors"))
        roster.preprocessors = j["preprocessors"].get<std::vector<std::string>>();
    if (j.contains("datasets")) roster.datasets = j["datasets"].get<std::vector<std::string>>();
    for (const auto& c : roster.predictors)
        if (c.kind == ComponentKind::kernel && !roster.find(*c.host))
            throw input_error("kernel '" + c.id + "' host '" + *c.host + "' is not in the roster");
    return roster;
}

Roster load_roster_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open roster manifest: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_roster_json(ss.str());
}

std::string roster_to_json(const Roster& roster) {
    nlohmann::json j;
    j["predictors"] = nlohmann::json::array();
    for (const auto& c : roster.predictors) {
        nlohmann::json item;
        item["id"] = c.id;
        item["kind"] = to_string(c.kind);
        if (c.host) item["host"] = *c.host;
        j["predictors"].push_back(item);
    }
    j["preprocessors"] = roster.preprocessors;
    j["datasets"] = roster.datasets;
    return j.dump(2) + "\n";
}

std::string Pipeline::final_predictor() const {
    if (components.empty()) throw std::invalid_argument("empty pipeline");
    return components.back();
}

std::string Pipeline::joined() const {
    std::string out;
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (i) out += '|';
        out += components[i];
    }
    return out;
}

void validate_pipeline(const Roster& roster, const Pipeline& pipeline, int max_len) {
    if (pipeline.components.empty()) throw input_error("pipeline must have at least one component");
    if (static_cast<int>(pipeline.components.size()) > max_len)
        throw input_error("pipeline exceeds the length limit of " + std::to_string(max_len));
    if (!pipeline.configs.empty() && pipeline.configs.size() != pipeline.components.size())
        throw input_error("pipeline configs must parallel its components");
    const auto* last = roster.find(pipeline.components.back());
    if (!last || (last->kind != ComponentKind::predictor &&
                  last->kind != ComponentKind::meta_predictor))
        throw input_error("pipeline must end in a predictor or meta-predictor: " +
                          pipeline.components.back());
}

// ---------------------------------------------------------------------------
// Strategy labels
// ---------------------------------------------------------------------------

std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::oracle: return "O";
        case StrategyKind::leaderboard: return "M";
        case StrategyKind::landmarked: return "L";
        case StrategyKind::random_cull: return "R";
        case StrategyKind::baseline: return "baseline";
        case StrategyKind::avatar: return "avatar";
        case StrategyKind::r30: return "r30";
    }
    return "baseline";
}

StrategyLabel parse_strategy_label(const std::string& text) {
    StrategyLabel label;
    label.text = text;
    if (text == "baseline") {
        label.kind = StrategyKind::baseline;
        return label;
    }
    if (text == "avatar") {
        label.kind = StrategyKind::avatar;
        return label;
    }
    if (text == "r30") {
        label.kind = StrategyKind::r30;
        return label;
    }

    auto fail = [&]() -> StrategyLabel {
        throw input_error("malformed strategy label: '" + text + "'");
    };
    if (text.empty()) return fail();
    std::string body = text;
    std::optional<std::uint64_t> seed;
    if (auto pos = body.find(":seed="); pos != std::string::npos) {
        auto parsed = parse_int(body.substr(pos + 6));
        if (!parsed || *parsed < 0) return fail();
        seed = static_cast<std::uint64_t>(*parsed);
        body = body.substr(0, pos);
    }

    switch (body[0]) {
        case 'O': label.kind = StrategyKind::oracle; break;
        case 'M': label.kind = StrategyKind::leaderboard; break;
        case 'L': label.kind = StrategyKind::landmarked; break;
        case 'R': label.kind = StrategyKind::random_cull; break;
        default: return fail();
    }
    std::size_t i = 1;
    std::string digits;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) digits += body[i++];
    if (!digits.empty()) {
        if (label.kind == StrategyKind::random_cull) return fail();  // no RX variants
        label.base_index = static_cast<int>(std::stoll(digits));
    }
    if (i + 2 > body.size() || body[i] != '-' || body[i + 1] != 'k') return fail();
    auto k = parse_int(body.substr(i + 2));
    if (!k || *k <= 0) return fail();
    label.k = static_cast<int>(*k);
    if (seed && label.kind != StrategyKind::random_cull) return fail();
    label.seed = seed;
    return label;
}

// ---------------------------------------------------------------------------
// Reduced spaces
// ---------------------------------------------------------------------------

std::vector<std::string> ReducedSpace::search_pool() const {
    std::vector<std::string> out = predictor_pool;
    out.insert(out.end(), closure_added.begin(), closure_added.end());
    return out;
}

std::vector<std::string> close_dependencies(const std::vector<std::string>& pool,
                                            const std::map<std::string, double>& rank_of,
                                            const Roster& roster) {
    if (pool.empty()) throw std::invalid_argument("close_dependencies: empty pool");

    std::set<std::string> present(pool.begin(), pool.end());
    std::vector<std::string> added;

    auto has_plain_predictor = [&]() {
        for (const auto& id : present) {
            const auto* spec = roster.find(id);
            if (spec && spec->kind == ComponentKind::predictor) return true;
        }
        return false;
    };
    auto rank_value = [&](const std::string& id) {
        auto it = rank_of.find(id);
        return it == rank_of.end() ? std::numeric_limits<double>::infinity() : it->second;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& id : std::vector<std::string>(present.begin(), present.end())) {
            const auto* spec = roster.find(id);
            if (!spec) throw input_error("pool member '" + id + "' is not in the roster");
            if (spec->kind == ComponentKind::kernel) {
                if (!present.count(*spec->host)) {
                    if (!roster.find(*spec->host))
                        throw input_error("roster lacks host '" + *spec->host + "' for kernel '" +
                                          id + "'");
                    present.insert(*spec->host);
                    added.push_back(*spec->host);
                    changed = true;
                }
            } else if (spec->needs_base_learner() && !has_plain_predictor()) {
                // Pull in the best-ranked plain predictor outside the pool.
                std::string best;
                double best_rank = std::numeric_limits<double>::infinity();
                for (const auto& candidate : roster.predictors) {
                    if (candidate.kind != ComponentKind::predictor) continue;
                    if (present.count(candidate.id)) continue;
                    double r = rank_value(candidate.id);
                    if (r < best_rank || (r == best_rank && (best.empty() || candidate.id < best))) {
                        best = candidate.id;
                        best_rank = r;
                    }
                }
                if (best.empty())
                    throw input_error(
                        "malformed roster manifest: no plain predictor can satisfy '" + id + "'");
                present.insert(best);
                added.push_back(best);
                changed = true;
            }
        }
    }
    return added;
}

static std::vector<std::string> uniform_subset(const std::vector<std::string>& ids, int k,
                                               std::uint64_t seed) {
    std::vector<std::string> deck = ids;
    std::sort(deck.begin(), deck.end());
    Rng rng(seed);
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(deck.size() - i));
        std::swap(deck[i], deck[j]);
    }
    deck.resize(k);
    return deck;
}

static std::vector<std::string> top_k(const std::vector<std::string>& order, int k) {
    return {order.begin(), order.begin() + k};
}

ReducedSpace apply_strategy(const StrategyLabel& label, const RankingTable& table,
                            const Roster& roster, const StrategyInputs& inputs) {
    const int universe = static_cast<int>(table.predictors().size());
    if (universe == 0 || table.datasets().empty())
        throw input_error("ranking table is empty; ingest a base with datasets first");
    ReducedSpace space;
    space.strategy_label = label.text;

    std::map<std::string, double> closure_rank = table.leaderboard_rank_map();
    switch (label.kind) {
        case StrategyKind::baseline:
        case StrategyKind::avatar: {
            space.predictor_pool = table.leaderboard_order();
            space.k_requested = universe;
            space.validity_filtering = (label.kind == StrategyKind::avatar);
            space.provenance = "full roster";
            break;
        }
        case StrategyKind::r30: {
            if (!inputs.r30_pipeline)
                throw input_error("r30 requires a prior-best pipeline");
            validate_pipeline(roster, *inputs.r30_pipeline);
            space.predictor_pool = {inputs.r30_pipeline->final_predictor()};
            space.k_requested = 1;
            space.locked_pipeline = inputs.r30_pipeline;
            space.provenance = "continuation of prior-best pipeline " +
                               inputs.r30_pipeline->joined();
            break;
        }
        case StrategyKind::oracle: {
            if (label.k < 1 || label.k > universe)
                throw input_error("k outside [1, " + std::to_string(universe) + "]: " + label.text);
            if (inputs.target_dataset.empty() || !table.has_dataset(inputs.target_dataset))
                throw input_error("oracle strategy needs the target dataset's ranks");
            space.predictor_pool = top_k(table.dataset_order(inputs.target_dataset), label.k);
            space.k_requested = label.k;
            space.provenance = "per-dataset ranks of " + inputs.target_dataset + " in " +
                               table.base_id();
            closure_rank = table.dataset_rank_map(inputs.target_dataset);
            break;
        }
        case StrategyKind::leaderboard: {
            if (label.k < 1 || label.k > universe)
                throw input_error("k outside [1, " + std::to_string(universe) + "]: " + label.text);
            space.predictor_pool = top_k(table.leaderboard_order(), label.k);
            space.k_requested = label.k;
            space.provenance = "global leaderboard of " + table.base_id();
            break;
        }
        case StrategyKind::landmarked: {
            if (label.k < 1 || label.k > universe)
                throw input_error("k outside [1, " + std::to_string(universe) + "]: " + label.text);
            if (!inputs.landmark)
                throw input_error("landmarked strategy needs a landmark result: " + label.text);
            const auto& lm = *inputs.landmark;
            if (!table.has_dataset(lm.neighbor_dataset))
                throw input_error("landmark neighbor '" + lm.neighbor_dataset +
                                  "' is not in the ranking table");
            space.predictor_pool = top_k(table.dataset_order(lm.neighbor_dataset), label.k);
            space.k_requested = label.k;
            space.landmark_cost = lm.landmark_cost;
            space.provenance = "ranks of most similar dataset " + lm.neighbor_dataset +
                               " (coefficient " + format_report(lm.coefficient) + ")";
            closure_rank = table.dataset_rank_map(lm.neighbor_dataset);
            break;
        }
        case StrategyKind::random_cull: {
            if (label.k < 1 || label.k > universe)
                throw input_error("k outside [1, " + std::to_string(universe) + "]: " + label.text);
            std::optional<std::uint64_t> seed = label.seed ? label.seed : inputs.seed;
            if (!seed) throw input_error("random culling needs a seed: " + label.text);
            space.predictor_pool = uniform_subset(table.predictors(), label.k, *seed);
            space.k_requested = label.k;
            space.provenance = "uniform cull, seed " + std::to_string(*seed);
            break;
        }
    }

    space.closure_added = close_dependencies(space.predictor_pool, closure_rank, roster);
    return space;
}

// ---------------------------------------------------------------------------
// Space size
// ---------------------------------------------------------------------------

namespace {

using u128 = unsigned __int128;

constexpr u128 kU128Max = ~static_cast<u128>(0);

u128 checked_mul(u128 a, u128 b) {
    if (a != 0 && b > kU128Max / a) throw std::overflow_error("space size exceeds 2^128");
    return a * b;
}

u128 checked_add(u128 a, u128 b) {
    if (b > kU128Max - a) throw std::overflow_error("space size exceeds 2^128");
    return a + b;
}

std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out += static_cast<char>('0' + static_cast<int>(v % 10));
        v /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace

SpaceSize space_size(const Roster& roster, int max_len, const Discretization& disc) {
    if (max_len < 1) throw input_error("max_len must be at least 1");

    u128 chain_choices = checked_mul(static_cast<u128>(roster.preprocessors.size()),
                                     disc.of(ComponentKind::preprocessor));
    u128 final_choices = 0;
    for (const auto& c : roster.predictors)
        final_choices = checked_add(final_choices, disc.of(c.kind));

    // sum over chain lengths 0 .. max_len-1 of chain_choices^L * final_choices
    u128 total = 0;
    u128 power = 1;
    for (int len = 0; len < max_len; ++len) {
        total = checked_add(total, checked_mul(power, final_choices));
        if (len + 1 < max_len) power = checked_mul(power, chain_choices);
    }

    SpaceSize out;
    out.decimal = u128_to_string(total);
    if (total <= static_cast<u128>(std::numeric_limits<std::int64_t>::max()))
        out.value = static_cast<std::uint64_t>(total);
    return out;
}

}  // namespace metareduce
