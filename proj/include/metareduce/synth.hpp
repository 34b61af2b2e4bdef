#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "metareduce/config_space.hpp"
#include "metareduce/harness.hpp"
#include "metareduce/meta_store.hpp"

namespace metareduce::synth {

// Deterministic sample corpus: two small meta-knowledge bases (5 datasets x
// 8 predictors) with planted mean errors, costs, a leaderboard flip confined
// to one adversarial dataset, a landmark similarity structure, and one
// anti-correlated dataset between the bases. The manifest records every
// planted truth so tests can check computed results against the design
// rather than against the implementation.
struct SampleData {
    Roster roster;
    std::vector<EvaluationRecord> automl_records;
    std::vector<EvaluationRecord> default_records;
    nlohmann::json manifest;

    MetaKnowledgeBase automl_base(bool credit_base_learners = false) const;
    MetaKnowledgeBase default_base() const;
};

SampleData make_sample_data();

// Surrogate surface with planted per-dataset rankings: 30 predictors over 6
// datasets, two of which prefer a specialist the global leaderboard misses.
// Built so that with a thin budget the oracle pools beat leaderboard pools
// beat random culls beat the unfiltered baseline.
struct SurfaceData {
    Roster roster;
    SurrogateSurface surface{10, 0.0, 1.0, {}};
    nlohmann::json planted;
};

SurfaceData make_hierarchy_surface();

// Writes roster.json, automl_meta.csv, default_meta.csv, manifest.json,
// surface.json, surface_roster.json into `dir`.
void write_sample_files(const std::string& dir);

}  // namespace metareduce::synth
