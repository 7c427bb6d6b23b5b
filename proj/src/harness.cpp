#include "srcrec/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "srcrec/schema.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace srcrec {

// ---- methods ------------------------------------------------------------------

Method method_from_string(const std::string& s) {
    if (s == "src") return Method::src;
    if (s == "src_a") return Method::src_a;
    if (s == "src_m") return Method::src_m;
    if (s == "src_nokt") return Method::src_nokt;
    if (s == "src_a_nokt") return Method::src_a_nokt;
    if (s == "src_m_nokt") return Method::src_m_nokt;
    if (s == "random") return Method::random;
    if (s == "rule") return Method::rule;
    if (s == "mpc") return Method::mpc;
    throw ValidationError("unknown method: " + s);
}

const char* to_string(Method m) {
    switch (m) {
        case Method::src: return "src";
        case Method::src_a: return "src_a";
        case Method::src_m: return "src_m";
        case Method::src_nokt: return "src_nokt";
        case Method::src_a_nokt: return "src_a_nokt";
        case Method::src_m_nokt: return "src_m_nokt";
        case Method::random: return "random";
        case Method::rule: return "rule";
        case Method::mpc: return "mpc";
    }
    return "?";
}

bool method_is_learned(Method m) {
    switch (m) {
        case Method::random:
        case Method::rule:
        case Method::mpc: return false;
        default: return true;
    }
}

EncoderVariant method_variant(Method m) {
    switch (m) {
        case Method::src:
        case Method::src_nokt: return EncoderVariant::combined;
        case Method::src_a:
        case Method::src_a_nokt: return EncoderVariant::attention_only;
        case Method::src_m:
        case Method::src_m_nokt: return EncoderVariant::mlp_only;
        default: throw ValidationError("method has no encoder variant");
    }
}

int method_beta(Method m) {
    switch (m) {
        case Method::src:
        case Method::src_a:
        case Method::src_m: return 1;
        case Method::src_nokt:
        case Method::src_a_nokt:
        case Method::src_m_nokt: return 0;
        default: throw ValidationError("method has no auxiliary-task switch");
    }
}

// ---- specs --------------------------------------------------------------------

WorldConfig WorldSpec::build(uint64_t run_seed) const {
    WorldConfig w;
    if (!influence_csv.empty()) {
        w.num_concepts = num_concepts;
        w.influence = load_influence_csv(influence_csv, num_concepts);
        w.difficulty = difficulty.empty()
                           ? std::vector<double>(static_cast<size_t>(num_concepts), 1.0)
                           : difficulty;
        w.seed = seed + run_seed;
    } else {
        w = preset_world(preset, num_concepts, seed + run_seed);
    }
    if (base_gain) w.base_gain = *base_gain;
    if (decay) w.decay = *decay;
    if (init_mastery) w.init_mastery = *init_mastery;
    if (noise_std) w.noise_std = *noise_std;
    w.bernoulli_feedback = bernoulli_feedback;
    w.validate();
    return w;
}

void ExperimentSpec::validate() const {
    if (methods.empty()) throw ValidationError("empty methods list");
    if (scenarios.empty()) throw ValidationError("empty scenarios list");
    if (lengths.empty()) throw ValidationError("empty lengths list");
    if (seeds.empty()) throw ValidationError("empty seeds list");
    if (eval_episodes < 1) throw ValidationError("eval_episodes must be >= 1");
    if (mpc_budget < 1) throw ValidationError("mpc_budget must be >= 1");
    for (int p : scenarios)
        if (p < 0 || p > 3) throw ValidationError("scenario must be in 0..3");
    for (int n : lengths)
        if (n < 1) throw ValidationError("lengths must be >= 1");
}

uint64_t ExperimentSpec::content_hash() const {
    ordered_json j;
    j["world"] = {{"preset", world.preset},
                  {"num_concepts", world.num_concepts},
                  {"seed", world.seed},
                  {"base_gain", world.base_gain ? json(*world.base_gain) : json()},
                  {"decay", world.decay ? json(*world.decay) : json()},
                  {"init_mastery", world.init_mastery ? json(*world.init_mastery) : json()},
                  {"noise_std", world.noise_std ? json(*world.noise_std) : json()},
                  {"bernoulli_feedback", world.bernoulli_feedback},
                  {"influence_csv", world.influence_csv},
                  {"difficulty", world.difficulty}};
    j["model"] = {{"embed_dim", model.embed_dim},
                  {"lstm_hidden", model.lstm_hidden},
                  {"score_dim", model.score_dim},
                  {"dropout_rate", model.dropout_rate}};
    j["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"lr_start", train.lr_start},
                  {"lr_end", train.lr_end},
                  {"l2", train.l2},
                  {"candidate_size", train.candidate_size},
                  {"baseline_subtraction", train.baseline_subtraction},
                  {"optimizer", to_string(train.optimizer)}};
    j["eval_episodes"] = eval_episodes;
    j["mpc_budget"] = mpc_budget;
    j["rule_descending"] = rule_descending;
    std::string s = j.dump();
    Fnv1a h;
    h.feed_bytes(s.data(), s.size());
    return h.digest();
}

// ---- cell cache -----------------------------------------------------------------

namespace {

std::string cell_file(const ExperimentSpec& spec, uint64_t chash, Method method, int p,
                      int n, uint64_t seed) {
    std::string key = std::string(to_string(method)) + "|p" + std::to_string(p) + "|n" +
                      std::to_string(n) + "|s" + std::to_string(seed);
    Fnv1a h;
    h.feed(chash);
    h.feed_bytes(key.data(), key.size());
    return spec.out_dir + "/cells/" + hex64(h.digest()) + ".json";
}

ordered_json cell_to_json(const ResultCell& cell, bool with_detail) {
    ordered_json j;
    j["method"] = cell.method;
    j["scenario"] = cell.scenario;
    j["length"] = cell.length;
    j["seed"] = cell.seed;
    j["episodes"] = cell.episodes;
    j["mean_ET"] = cell.mean_et;
    j["std_ET"] = cell.std_et;
    j["episode_hash"] = hex64(cell.episode_hash);
    j["failed"] = cell.failed;
    j["error"] = cell.error;
    if (with_detail) {
        ordered_json d = ordered_json::array();
        for (const auto& ev : cell.detail)
            d.push_back({{"episode", hex64(ev.episode)},
                         {"path", ev.path},
                         {"E_T", ev.e_t},
                         {"y", ev.y}});
        j["detail"] = std::move(d);
    }
    return j;
}

void write_cell_json(const std::string& path, const ResultCell& cell) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write cell file: " + path);
    out << cell_to_json(cell, true).dump(1) << "\n";
}

bool load_cell_json(const std::string& path, ResultCell* cell) {
    std::ifstream in(path);
    if (!in) return false;
    json j;
    try {
        j = json::parse(in);
        cell->method = j.at("method").get<std::string>();
        cell->scenario = j.at("scenario").get<int>();
        cell->length = j.at("length").get<int>();
        cell->seed = j.at("seed").get<uint64_t>();
        cell->episodes = j.at("episodes").get<int>();
        cell->mean_et = j.at("mean_ET").get<double>();
        cell->std_et = j.at("std_ET").get<double>();
        cell->episode_hash = std::stoull(j.at("episode_hash").get<std::string>(), nullptr, 16);
        cell->failed = j.at("failed").get<bool>();
        cell->error = j.at("error").get<std::string>();
        cell->detail.clear();
        for (const auto& d : j.at("detail")) {
            EpisodeEval ev;
            ev.episode = std::stoull(d.at("episode").get<std::string>(), nullptr, 16);
            ev.path = d.at("path").get<std::vector<int>>();
            ev.e_t = d.at("E_T").get<double>();
            ev.y = d.at("y").get<std::vector<double>>();
            cell->detail.push_back(std::move(ev));
        }
    } catch (const std::exception&) {
        return false;  // corrupt cache entries are recomputed
    }
    return true;
}

TrainConfig cell_train_config(const ExperimentSpec& spec, int p, int n, uint64_t seed) {
    TrainConfig tc = spec.train;
    tc.scenario = p;
    tc.path_length = n;
    tc.seed = seed;
    tc.beta = 1;  // sampler-relevant fields only; beta is per method
    return tc;
}

void compute_cell(const ExperimentSpec& spec, const WorldConfig& world,
                  const std::vector<Episode>& eps, Method method, int p, int n,
                  uint64_t seed, ResultCell* cell) {
    ModelParams trained;
    bool learned = method_is_learned(method);
    if (learned) {
        ModelConfig mc = spec.model;
        mc.num_concepts = world.num_concepts;
        mc.encoder_variant = method_variant(method);
        TrainConfig tc = cell_train_config(spec, p, n, seed);
        tc.beta = method_beta(method);
        Rng init_rng = Rng::derive(seed, kModelInitStream);
        ModelParams start = ModelParams::init(mc, init_rng);
        trained = train(start, world, tc).params;
    }

    for (size_t k = 0; k < eps.size(); ++k) {
        const Episode& e = eps[k];
        std::vector<int> path;
        if (learned) {
            Tape tape;
            LiftedParams lp = lift(tape, trained);
            Rng greedy_rng(0);  // greedy decoding draws nothing
            path = roll_path(tape, lp, trained.config, e, DecodeMode::greedy, greedy_rng)
                       .concepts;
        } else if (method == Method::random) {
            Rng r = Rng::derive(seed, kPolicyStreamBase + k);
            path = random_policy(e, r).path;
        } else if (method == Method::rule) {
            path = rule_based_policy(e, world, spec.rule_descending).path;
        } else {
            Rng r = Rng::derive(seed, kPolicyStreamBase + k);
            path = mpc_policy(e, world, spec.mpc_budget, r).path;
        }
        Rng world_rng = Rng::derive(seed, kEvalWorldBase + k);
        SimOutcome out = run_path(world, e.history, path, e.targets, world_rng);
        cell->detail.push_back({episode_fingerprint({e}), path, out.e_t, out.feedback});
    }

    int cnt = static_cast<int>(cell->detail.size());
    double sum = 0.0;
    for (const auto& ev : cell->detail) sum += ev.e_t;
    double mean = sum / cnt;
    double var = 0.0;
    for (const auto& ev : cell->detail) var += (ev.e_t - mean) * (ev.e_t - mean);
    cell->episodes = cnt;
    cell->mean_et = mean;
    cell->std_et = cnt > 1 ? std::sqrt(var / (cnt - 1)) : 0.0;
}

}  // namespace

// ---- the grid -------------------------------------------------------------------

ResultTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    fs::create_directories(spec.out_dir + "/cells");
    uint64_t chash = spec.content_hash();

    ResultTable table;
    for (uint64_t seed : spec.seeds) {
        for (int p : spec.scenarios) {
            for (int n : spec.lengths) {
                // one shared episode stream per cell keeps comparisons paired
                WorldConfig world;
                std::vector<Episode> eval_eps;
                uint64_t ep_hash = 0;
                std::string setup_error;
                try {
                    world = spec.world.build(seed);
                    EpisodeSampler sampler(world, cell_train_config(spec, p, n, seed));
                    for (int k = 0; k < spec.eval_episodes; ++k)
                        eval_eps.push_back(
                            sampler.sample(kEvalStreamBase + static_cast<uint64_t>(k)));
                    ep_hash = episode_fingerprint(eval_eps);
                } catch (const std::exception& e) {
                    setup_error = e.what();
                }

                for (Method method : spec.methods) {
                    ResultCell cell;
                    cell.method = to_string(method);
                    cell.scenario = p;
                    cell.length = n;
                    cell.seed = seed;
                    cell.episode_hash = ep_hash;

                    std::string path = cell_file(spec, chash, method, p, n, seed);
                    ResultCell cached;
                    if (load_cell_json(path, &cached)) {
                        table.cells.push_back(std::move(cached));
                        continue;
                    }
                    if (!setup_error.empty()) {
                        cell.failed = true;
                        cell.error = setup_error;
                    } else {
                        try {
                            compute_cell(spec, world, eval_eps, method, p, n, seed, &cell);
                        } catch (const std::exception& e) {
                            cell.failed = true;
                            cell.error = e.what();
                            cell.detail.clear();
                            cell.episodes = 0;
                            cell.mean_et = 0.0;
                            cell.std_et = 0.0;
                        }
                    }
                    write_cell_json(path, cell);
                    table.cells.push_back(std::move(cell));
                }
            }
        }
    }

    write_results_csv(spec.out_dir + "/results.csv", table);
    write_summary_json(spec.out_dir + "/summary.json", spec, table);
    write_paths_jsonl(spec.out_dir + "/paths.jsonl", table);
    return table;
}

ResultTable ablation_grid(ExperimentSpec spec) {
    spec.methods = {Method::src,      Method::src_a,      Method::src_m,
                    Method::src_nokt, Method::src_a_nokt, Method::src_m_nokt};
    return run_experiment(spec);
}

// ---- reports --------------------------------------------------------------------

void write_results_csv(const std::string& path, const ResultTable& table) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write results csv: " + path);
    out << "method,scenario,length,seed,episodes,mean_ET,std_ET,episode_hash,status\n";
    char buf[256];
    for (const auto& c : table.cells) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%llu,%d,%.17g,%.17g,%s,%s\n",
                      c.method.c_str(), c.scenario, c.length,
                      static_cast<unsigned long long>(c.seed), c.episodes, c.mean_et,
                      c.std_et, hex64(c.episode_hash).c_str(), c.failed ? "failed" : "ok");
        out << buf;
    }
}

const char* summary_schema_text() {
    return R"({
 "type": "object",
 "required": ["spec", "content_hash", "cells", "aggregates"],
 "additionalProperties": false,
 "properties": {
  "spec": {"type": "object"},
  "content_hash": {"type": "string"},
  "cells": {
   "type": "array",
   "items": {
    "type": "object",
    "required": ["method", "scenario", "length", "seed", "episodes", "mean_ET", "std_ET", "episode_hash", "failed", "error"],
    "properties": {
     "method": {"type": "string"},
     "scenario": {"type": "integer", "minimum": 0},
     "length": {"type": "integer", "minimum": 1},
     "seed": {"type": "integer", "minimum": 0},
     "episodes": {"type": "integer", "minimum": 0},
     "mean_ET": {"type": "number"},
     "std_ET": {"type": "number"},
     "episode_hash": {"type": "string"},
     "failed": {"type": "boolean"},
     "error": {"type": "string"}
    }
   }
  },
  "aggregates": {
   "type": "array",
   "items": {
    "type": "object",
    "required": ["method", "scenario", "length", "mean_ET", "std_ET", "seeds", "failed_seeds"],
    "properties": {
     "method": {"type": "string"},
     "scenario": {"type": "integer", "minimum": 0},
     "length": {"type": "integer", "minimum": 1},
     "mean_ET": {"type": "number"},
     "std_ET": {"type": "number"},
     "seeds": {"type": "integer", "minimum": 0},
     "failed_seeds": {"type": "integer", "minimum": 0}
    }
   }
  }
 }
}
)";
}

void write_summary_json(const std::string& path, const ExperimentSpec& spec,
                        const ResultTable& table) {
    ordered_json j;
    ordered_json sp;
    sp["world_preset"] = spec.world.preset;
    sp["num_concepts"] = spec.world.num_concepts;
    sp["world_seed"] = spec.world.seed;
    sp["scenarios"] = spec.scenarios;
    sp["lengths"] = spec.lengths;
    ordered_json ms = ordered_json::array();
    for (Method m : spec.methods) ms.push_back(to_string(m));
    sp["methods"] = std::move(ms);
    sp["eval_episodes"] = spec.eval_episodes;
    ordered_json sd = ordered_json::array();
    for (uint64_t s : spec.seeds) sd.push_back(s);
    sp["seeds"] = std::move(sd);
    sp["epochs"] = spec.train.epochs;
    sp["batch_size"] = spec.train.batch_size;
    sp["candidate_size"] = spec.train.candidate_size;
    sp["mpc_budget"] = spec.mpc_budget;
    j["spec"] = std::move(sp);
    j["content_hash"] = hex64(spec.content_hash());

    ordered_json cells = ordered_json::array();
    for (const auto& c : table.cells) cells.push_back(cell_to_json(c, false));
    j["cells"] = std::move(cells);

    // per (method, scenario, length): stats over the seeds that succeeded
    ordered_json aggs = ordered_json::array();
    std::set<std::tuple<std::string, int, int>> keys;
    for (const auto& c : table.cells) keys.insert({c.method, c.scenario, c.length});
    for (const auto& [method, p, n] : keys) {
        std::vector<double> means;
        int failed = 0;
        for (const auto& c : table.cells) {
            if (c.method != method || c.scenario != p || c.length != n) continue;
            if (c.failed)
                ++failed;
            else
                means.push_back(c.mean_et);
        }
        double mean = 0.0, sd = 0.0;
        if (!means.empty()) {
            for (double x : means) mean += x;
            mean /= static_cast<double>(means.size());
            if (means.size() > 1) {
                for (double x : means) sd += (x - mean) * (x - mean);
                sd = std::sqrt(sd / static_cast<double>(means.size() - 1));
            }
        }
        aggs.push_back({{"method", method},
                        {"scenario", p},
                        {"length", n},
                        {"mean_ET", mean},
                        {"std_ET", sd},
                        {"seeds", static_cast<int>(means.size())},
                        {"failed_seeds", failed}});
    }
    j["aggregates"] = std::move(aggs);

    std::string err;
    if (!schema_validate(json::parse(summary_schema_text()), j, &err))
        throw ValidationError("summary does not match its schema: " + err);

    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write summary json: " + path);
    out << j.dump(1) << "\n";
}

void write_paths_jsonl(const std::string& path, const ResultTable& table) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write paths jsonl: " + path);
    for (const auto& c : table.cells) {
        for (const auto& ev : c.detail) {
            ordered_json j;
            j["episode"] = hex64(ev.episode);
            j["method"] = c.method;
            j["scenario"] = c.scenario;
            j["length"] = c.length;
            j["seed"] = c.seed;
            j["path"] = ev.path;
            j["E_T"] = ev.e_t;
            j["y"] = ev.y;
            out << j.dump() << "\n";
        }
    }
}

// ---- config files ----------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& section, const std::string& key,
                            const std::string& value) {
    throw ValidationError("bad value for " + section + "." + key + ": '" + value + "'");
}

int parse_int(const std::string& sec, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) bad_value(sec, key, v);
        return x;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(sec, key, v);
    }
}

uint64_t parse_u64(const std::string& sec, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) bad_value(sec, key, v);
        return x;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(sec, key, v);
    }
}

double parse_double(const std::string& sec, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) bad_value(sec, key, v);
        return x;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(sec, key, v);
    }
}

bool parse_bool(const std::string& sec, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(sec, key, v);
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
    ParsedConfig out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": empty section name");
            out.sections[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        if (section.empty())
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": key outside a [section]");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
        out.sections[section][key] = value;
    }
    return out;
}

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_config(const ParsedConfig& cfg, ExperimentSpec* spec) {
    for (const auto& [section, keys] : cfg.sections) {
        for (const auto& [key, value] : keys) {
            if (section == "model") {
                if (key == "embed_dim") spec->model.embed_dim = parse_int(section, key, value);
                else if (key == "lstm_hidden") spec->model.lstm_hidden = parse_int(section, key, value);
                else if (key == "score_dim") spec->model.score_dim = parse_int(section, key, value);
                else if (key == "dropout_rate") spec->model.dropout_rate = parse_double(section, key, value);
                else if (key == "encoder_variant") spec->model.encoder_variant = encoder_variant_from_string(value);
                else throw ValidationError("unknown key '" + key + "' in [model]");
            } else if (section == "train") {
                if (key == "epochs") spec->train.epochs = parse_int(section, key, value);
                else if (key == "batch_size") spec->train.batch_size = parse_int(section, key, value);
                else if (key == "lr_start") spec->train.lr_start = parse_double(section, key, value);
                else if (key == "lr_end") spec->train.lr_end = parse_double(section, key, value);
                else if (key == "l2") spec->train.l2 = parse_double(section, key, value);
                else if (key == "beta") spec->train.beta = parse_int(section, key, value);
                else if (key == "path_length") spec->train.path_length = parse_int(section, key, value);
                else if (key == "candidate_size") spec->train.candidate_size = parse_int(section, key, value);
                else if (key == "scenario") spec->train.scenario = parse_int(section, key, value);
                else if (key == "seed") spec->train.seed = parse_u64(section, key, value);
                else if (key == "baseline_subtraction") spec->train.baseline_subtraction = parse_bool(section, key, value);
                else if (key == "optimizer") spec->train.optimizer = optimizer_from_string(value);
                else if (key == "holdout_episodes") spec->train.holdout_episodes = parse_int(section, key, value);
                else if (key == "divergence_dump_path") spec->train.divergence_dump_path = value;
                else throw ValidationError("unknown key '" + key + "' in [train]");
            } else if (section == "world") {
                if (key == "preset") spec->world.preset = value;
                else if (key == "num_concepts") spec->world.num_concepts = parse_int(section, key, value);
                else if (key == "seed") spec->world.seed = parse_u64(section, key, value);
                else if (key == "base_gain") spec->world.base_gain = parse_double(section, key, value);
                else if (key == "decay") spec->world.decay = parse_double(section, key, value);
                else if (key == "init_mastery") spec->world.init_mastery = parse_double(section, key, value);
                else if (key == "noise_std") spec->world.noise_std = parse_double(section, key, value);
                else if (key == "bernoulli_feedback") spec->world.bernoulli_feedback = parse_bool(section, key, value);
                else if (key == "influence_csv") spec->world.influence_csv = value;
                else if (key == "difficulty") {
                    spec->world.difficulty.clear();
                    for (const auto& item : split_list(value))
                        spec->world.difficulty.push_back(parse_double(section, key, item));
                } else throw ValidationError("unknown key '" + key + "' in [world]");
            } else if (section == "experiment") {
                if (key == "scenarios") {
                    spec->scenarios.clear();
                    for (const auto& item : split_list(value))
                        spec->scenarios.push_back(parse_int(section, key, item));
                } else if (key == "lengths") {
                    spec->lengths.clear();
                    for (const auto& item : split_list(value))
                        spec->lengths.push_back(parse_int(section, key, item));
                } else if (key == "methods") {
                    spec->methods.clear();
                    for (const auto& item : split_list(value))
                        spec->methods.push_back(method_from_string(item));
                } else if (key == "seeds") {
                    spec->seeds.clear();
                    for (const auto& item : split_list(value))
                        spec->seeds.push_back(parse_u64(section, key, item));
                } else if (key == "eval_episodes") {
                    spec->eval_episodes = parse_int(section, key, value);
                } else if (key == "mpc_budget") {
                    spec->mpc_budget = parse_int(section, key, value);
                } else if (key == "rule_descending") {
                    spec->rule_descending = parse_bool(section, key, value);
                } else if (key == "out_dir") {
                    spec->out_dir = value;
                } else {
                    throw ValidationError("unknown key '" + key + "' in [experiment]");
                }
            } else {
                throw ValidationError("unknown config section [" + section + "]");
            }
        }
    }
}

}  // namespace srcrec
