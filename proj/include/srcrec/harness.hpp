#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "srcrec/baselines.hpp"
#include "srcrec/model.hpp"
#include "srcrec/training.hpp"

namespace srcrec {

// evaluation-time stream ids, disjoint from the training ranges
constexpr uint64_t kEvalStreamBase = 0x1800000000000000ULL;
constexpr uint64_t kEvalWorldBase = 0x1C00000000000000ULL;
constexpr uint64_t kPolicyStreamBase = 0x2000000000000000ULL;
constexpr uint64_t kModelInitStream = 0x2400000000000000ULL;

// src variants pin encoder and auxiliary task; the _nokt tags switch the
// knowledge-tracing loss off
enum class Method {
    src,
    src_a,
    src_m,
    src_nokt,
    src_a_nokt,
    src_m_nokt,
    random,
    rule,
    mpc,
};

Method method_from_string(const std::string& s);
const char* to_string(Method m);
bool method_is_learned(Method m);
EncoderVariant method_variant(Method m);  // learned methods only
int method_beta(Method m);                // learned methods only

struct WorldSpec {
    std::string preset = "prereq-chain";
    int num_concepts = 8;
    uint64_t seed = 0;
    std::optional<double> base_gain, decay, init_mastery, noise_std;
    bool bernoulli_feedback = false;
    std::string influence_csv;       // custom graph; overrides the preset
    std::vector<double> difficulty;  // used with influence_csv (default 1.0)

    // every grid seed gets its own world instance: preset wiring drawn from
    // seed + run_seed
    WorldConfig build(uint64_t run_seed) const;
};

struct ExperimentSpec {
    WorldSpec world;
    ModelConfig model;  // num_concepts and encoder_variant are set per cell
    TrainConfig train;  // scenario, path_length, seed and beta are set per cell
    std::vector<int> scenarios = {0};
    std::vector<int> lengths = {5, 10, 20, 30};
    std::vector<Method> methods = {Method::src, Method::random, Method::rule};
    int eval_episodes = 100;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    int mpc_budget = 16;
    bool rule_descending = false;
    std::string out_dir = ".";

    void validate() const;
    // hash of every field a single cell's numbers depend on; grid lists and
    // output locations are excluded so edits to them reuse finished cells
    uint64_t content_hash() const;
};

struct EpisodeEval {
    uint64_t episode = 0;  // fingerprint of the evaluated episode
    std::vector<int> path;
    double e_t = 0.0;
    std::vector<double> y;  // simulator feedback along the path
};

struct ResultCell {
    std::string method;
    int scenario = 0;
    int length = 0;
    uint64_t seed = 0;
    int episodes = 0;
    double mean_et = 0.0;
    double std_et = 0.0;
    uint64_t episode_hash = 0;  // fingerprint of the shared eval stream
    bool failed = false;
    std::string error;
    std::vector<EpisodeEval> detail;
};

struct ResultTable {
    std::vector<ResultCell> cells;
};

// Runs every (method, scenario, length, seed) cell: learned methods train
// once per cell, then all methods are scored greedily on one shared episode
// stream so comparisons are paired. A method failure marks its cell and the
// grid moves on. Finished cells are cached under out_dir/cells/ keyed by the
// spec content hash, so re-running a partial grid resumes. Writes
// results.csv, summary.json (schema-checked) and paths.jsonl into out_dir.
ResultTable run_experiment(const ExperimentSpec& spec);

// the six-variant encoder/KT grid; overrides spec.methods
ResultTable ablation_grid(ExperimentSpec spec);

void write_results_csv(const std::string& path, const ResultTable& table);
void write_summary_json(const std::string& path, const ExperimentSpec& spec,
                        const ResultTable& table);
void write_paths_jsonl(const std::string& path, const ResultTable& table);

// embedded copy of schemas/summary.schema.json (kept identical by test)
const char* summary_schema_text();

// ---- config files -----------------------------------------------------------

// [section] / key = value lines; '#' and ';' comments
struct ParsedConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;
};

ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);

// applies the parsed keys onto the spec; unknown sections or keys throw
void apply_config(const ParsedConfig& cfg, ExperimentSpec* spec);

}  // namespace srcrec
