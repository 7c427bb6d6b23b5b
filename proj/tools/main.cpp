// srcrec: train, evaluate and compare learning-path recommenders from the
// command line. Every subcommand reads the same INI config; --seed and --out
// override the config's run seed and output directory.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "srcrec/harness.hpp"

namespace fs = std::filesystem;
using namespace srcrec;
using nlohmann::ordered_json;

namespace {

struct CliOptions {
    std::string config_path;
    long long seed = -1;  // <0 keeps the config value
    std::string out_dir;
    bool out_given = false;
};

ExperimentSpec load_spec(const CliOptions& opt) {
    ExperimentSpec spec;
    if (!opt.config_path.empty()) apply_config(parse_config_file(opt.config_path), &spec);
    if (opt.seed >= 0) {
        spec.train.seed = static_cast<uint64_t>(opt.seed);
        spec.seeds = {static_cast<uint64_t>(opt.seed)};
    }
    if (opt.out_given) spec.out_dir = opt.out_dir;
    return spec;
}

// episodes shared with the harness: same streams, same worlds
std::vector<Episode> sample_eval_episodes(const WorldConfig& world, TrainConfig tc,
                                          int count) {
    EpisodeSampler sampler(world, tc);
    std::vector<Episode> out;
    for (int k = 0; k < count; ++k)
        out.push_back(sampler.sample(kEvalStreamBase + static_cast<uint64_t>(k)));
    return out;
}

int cmd_train(const CliOptions& opt) {
    ExperimentSpec spec = load_spec(opt);
    WorldConfig world = spec.world.build(spec.train.seed);
    ModelConfig mc = spec.model;
    mc.num_concepts = world.num_concepts;
    Rng init_rng = Rng::derive(spec.train.seed, kModelInitStream);
    ModelParams start = ModelParams::init(mc, init_rng);
    TrainResult res = train(start, world, spec.train);

    fs::create_directories(spec.out_dir);
    save_checkpoint(res.params, spec.out_dir + "/checkpoint.json");
    write_records_csv(spec.out_dir + "/records.csv", res.records);
    write_train_summary_json(spec.out_dir + "/train_summary.json", spec.train, res.records);

    double final_et = res.records.empty() ? 0.0 : res.records.back().greedy_et;
    std::printf("trained %d epochs, final greedy E_T %.4f\n",
                static_cast<int>(res.records.size()), final_et);
    std::printf("checkpoint: %s/checkpoint.json\n", spec.out_dir.c_str());
    return 0;
}

int cmd_eval(const CliOptions& opt, const std::string& checkpoint) {
    ExperimentSpec spec = load_spec(opt);
    uint64_t seed = spec.train.seed;
    ModelParams params = load_checkpoint(checkpoint);
    WorldConfig world = spec.world.build(seed);
    if (params.config.num_concepts != world.num_concepts)
        throw ValidationError("checkpoint was trained for " +
                              std::to_string(params.config.num_concepts) +
                              " concepts but the world has " +
                              std::to_string(world.num_concepts));

    TrainConfig tc = spec.train;
    tc.seed = seed;
    std::vector<Episode> episodes = sample_eval_episodes(world, tc, spec.eval_episodes);

    ordered_json rows = ordered_json::array();
    double sum = 0.0, sq = 0.0;
    for (size_t k = 0; k < episodes.size(); ++k) {
        const Episode& e = episodes[k];
        Tape tape;
        LiftedParams lp = lift(tape, params);
        Rng greedy_rng(0);
        PathSample s = roll_path(tape, lp, params.config, e, DecodeMode::greedy, greedy_rng);
        Rng world_rng = Rng::derive(seed, kEvalWorldBase + k);
        SimOutcome out = run_path(world, e.history, s.concepts, e.targets, world_rng);
        sum += out.e_t;
        sq += out.e_t * out.e_t;
        rows.push_back({{"episode", hex64(episode_fingerprint({e}))},
                        {"path", s.concepts},
                        {"E_T", out.e_t},
                        {"y", out.feedback}});
    }
    double n = static_cast<double>(episodes.size());
    double mean = sum / n;
    double sd = n > 1 ? std::sqrt((sq - n * mean * mean) / (n - 1)) : 0.0;

    ordered_json j;
    j["checkpoint"] = checkpoint;
    j["episodes"] = episodes.size();
    j["episode_hash"] = hex64(episode_fingerprint(episodes));
    j["mean_ET"] = mean;
    j["std_ET"] = sd;
    j["rows"] = std::move(rows);
    fs::create_directories(spec.out_dir);
    std::ofstream out(spec.out_dir + "/eval.json");
    out << j.dump(1) << "\n";

    std::printf("%zu episodes, mean E_T %.4f, std %.4f\n", episodes.size(), mean, sd);
    return 0;
}

void print_table(const ResultTable& table) {
    std::printf("%-12s %8s %6s %4s %8s %8s %s\n", "method", "scenario", "length", "seed",
                "mean_ET", "std_ET", "status");
    for (const auto& c : table.cells)
        std::printf("%-12s %8d %6d %4llu %8.4f %8.4f %s\n", c.method.c_str(), c.scenario,
                    c.length, static_cast<unsigned long long>(c.seed), c.mean_et, c.std_et,
                    c.failed ? "failed" : "ok");
}

int cmd_compare(const CliOptions& opt) {
    ExperimentSpec spec = load_spec(opt);
    ResultTable table = run_experiment(spec);
    print_table(table);
    std::printf("reports in %s\n", spec.out_dir.c_str());
    return 0;
}

int cmd_ablate(const CliOptions& opt) {
    ExperimentSpec spec = load_spec(opt);
    ResultTable table = ablation_grid(std::move(spec));
    print_table(table);
    return 0;
}

int cmd_oracle(const CliOptions& opt, int m, int n) {
    ExperimentSpec spec = load_spec(opt);
    uint64_t seed = spec.train.seed;
    WorldConfig world = spec.world.build(seed);
    if (world.noise_std != 0.0)
        throw ValidationError("oracle needs a deterministic world (noise_std 0)");
    if (m < n || n < 1) throw ValidationError("oracle needs m >= n >= 1");

    TrainConfig tc = spec.train;
    tc.scenario = 2;
    tc.candidate_size = m;
    tc.path_length = n;
    tc.seed = seed;
    EpisodeSampler sampler(world, tc);
    Episode e = sampler.sample(kEvalStreamBase);

    std::printf("candidates:");
    for (int c : e.candidates) std::printf(" %d", c);
    std::printf("\ntargets:");
    for (int c : e.targets) std::printf(" %d", c);
    std::printf("\n");

    // every ordered n-selection of the candidate set, scored end to end
    std::vector<std::pair<std::vector<int>, double>> rows;
    std::vector<int> path;
    std::vector<bool> used(e.candidates.size(), false);
    Rng rng(0);  // deterministic world: never drawn from
    auto walk = [&](auto&& self) -> void {
        if (static_cast<int>(path.size()) == n) {
            SimOutcome out = run_path(world, e.history, path, e.targets, rng);
            rows.emplace_back(path, out.e_t);
            return;
        }
        for (size_t i = 0; i < e.candidates.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            path.push_back(e.candidates[i]);
            self(self);
            path.pop_back();
            used[i] = false;
        }
    };
    walk(walk);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::printf("%zu paths:\n", rows.size());
    for (const auto& [p, et] : rows) {
        std::printf("  ");
        for (size_t i = 0; i < p.size(); ++i)
            std::printf("%s%d", i ? " -> " : "", p[i]);
        std::printf("   E_T %.6f\n", et);
    }
    return 0;
}

int cmd_gradcheck(const CliOptions& opt) {
    ExperimentSpec spec = load_spec(opt);
    uint64_t seed = spec.train.seed;

    // tiny full-loss instance: combined encoder, auxiliary head on, weight decay on
    ModelConfig mc;
    mc.num_concepts = 8;
    mc.embed_dim = 4;
    mc.lstm_hidden = 4;
    mc.score_dim = 4;
    mc.dropout_rate = 0.0;  // finite differences need a deterministic forward
    mc.encoder_variant = EncoderVariant::combined;
    WorldConfig world = preset_world("prereq-chain", mc.num_concepts, seed);

    TrainConfig tc;
    tc.scenario = 2;
    tc.candidate_size = 5;
    tc.path_length = 3;
    tc.seed = seed;
    EpisodeSampler sampler(world, tc);
    Episode e = sampler.sample(kEvalStreamBase);

    Rng init_rng = Rng::derive(seed, kModelInitStream);
    ModelParams base = ModelParams::init(mc, init_rng);

    // one sampled rollout fixes the path; the loss then depends only on params
    std::vector<int> forced;
    {
        Tape t;
        LiftedParams lp = lift(t, base);
        Rng draw = Rng::derive(seed, kPolicyStreamBase);
        forced = roll_path(t, lp, mc, e, DecodeMode::sample, draw).positions;
    }
    std::vector<int> concepts;
    for (int pos : forced) concepts.push_back(e.candidates[static_cast<size_t>(pos)]);
    Rng world_rng = Rng::derive(seed, kEvalWorldBase);
    SimOutcome outcome = run_path(world, e.history, concepts, e.targets, world_rng);

    auto f = [&](Tape& t, const std::vector<Value>& v) {
        LiftedParams lp;
        lp.v = v;
        Rng inner(0);
        PathSample s = roll_path(t, lp, mc, e, DecodeMode::sample, inner, false, &forced);
        return total_loss(lp, s, outcome, 1, 4e-5, outcome.e_t);
    };
    GradCheckResult r = grad_check(f, base.w, 1e-5);

    std::printf("max relative error: %.3g (param %s, entry %d, analytic %.6g, cd %.6g)\n",
                r.max_rel_err, r.param_index >= 0 ? param_name(static_cast<ParamId>(r.param_index)) : "-",
                r.entry_index, r.analytic, r.numeric);
    if (r.max_rel_err < 1e-4) {
        std::printf("gradcheck ok\n");
        return 0;
    }
    std::printf("gradcheck FAILED (tolerance 1e-4)\n");
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-to-sequence learning-path recommender"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opt;
    app.add_option("--config", opt.config_path, "INI config file");
    app.add_option("--seed", opt.seed, "override the run seed");
    auto* out_opt = app.add_option("--out", opt.out_dir, "output directory");

    CLI::App* train_cmd = app.add_subcommand("train", "train one model from the config");
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string checkpoint;
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint json")->required();
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "run the method x scenario x length grid");
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the six-variant ablation grid");
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "brute-force path table for one small episode");
    int oracle_m = 4, oracle_n = 2;
    oracle_cmd->add_option("--m", oracle_m, "candidate set size");
    oracle_cmd->add_option("--n", oracle_n, "path length");
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "full-model finite-difference gradient check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the complaint and a usage hint
        return 1;
    }
    opt.out_given = out_opt->count() > 0;

    try {
        if (train_cmd->parsed()) return cmd_train(opt);
        if (eval_cmd->parsed()) return cmd_eval(opt, checkpoint);
        if (compare_cmd->parsed()) return cmd_compare(opt);
        if (ablate_cmd->parsed()) return cmd_ablate(opt);
        if (oracle_cmd->parsed()) return cmd_oracle(opt, oracle_m, oracle_n);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(opt);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\nrun '%s --help' for usage\n", e.what(), argv[0]);
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
