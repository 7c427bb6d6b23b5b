// Python surface: worlds, episodes, the three baselines, training and greedy
// decoding. Thin wrappers over the C++ core; RNG seeds are explicit everywhere
// so results match the CLI bit for bit.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "srcrec/harness.hpp"

namespace py = pybind11;
using namespace srcrec;

namespace {

std::vector<Episode> sample_episodes(const WorldConfig& world, int scenario,
                                     int path_length, int count, uint64_t seed,
                                     int candidate_size) {
    TrainConfig tc;
    tc.scenario = scenario;
    tc.path_length = path_length;
    tc.seed = seed;
    tc.candidate_size = candidate_size;
    EpisodeSampler sampler(world, tc);
    std::vector<Episode> out;
    for (int k = 0; k < count; ++k)
        out.push_back(sampler.sample(kEvalStreamBase + static_cast<uint64_t>(k)));
    return out;
}

std::pair<ModelParams, std::vector<TrainRecord>> train_model(
    const WorldConfig& world, int scenario, int path_length, int epochs, int batch_size,
    uint64_t seed, int embed_dim, int lstm_hidden, int score_dim,
    const std::string& encoder_variant, int beta, double lr_start, double lr_end,
    double l2, int candidate_size, const std::string& optimizer,
    bool baseline_subtraction, int holdout_episodes, double dropout_rate) {
    ModelConfig mc;
    mc.num_concepts = world.num_concepts;
    mc.embed_dim = embed_dim;
    mc.lstm_hidden = lstm_hidden;
    mc.score_dim = score_dim;
    mc.encoder_variant = encoder_variant_from_string(encoder_variant);
    mc.dropout_rate = dropout_rate;

    TrainConfig tc;
    tc.scenario = scenario;
    tc.path_length = path_length;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.seed = seed;
    tc.beta = beta;
    tc.lr_start = lr_start;
    tc.lr_end = lr_end;
    tc.l2 = l2;
    tc.candidate_size = candidate_size;
    tc.optimizer = optimizer_from_string(optimizer);
    tc.baseline_subtraction = baseline_subtraction;
    tc.holdout_episodes = holdout_episodes;

    Rng init_rng = Rng::derive(seed, kModelInitStream);
    ModelParams start = ModelParams::init(mc, init_rng);
    TrainResult res = train(start, world, tc);
    return {std::move(res.params), std::move(res.records)};
}

std::vector<int> greedy_path(const ModelParams& params, const Episode& e) {
    Tape tape;
    LiftedParams lp = lift(tape, params);
    Rng rng(0);
    return roll_path(tape, lp, params.config, e, DecodeMode::greedy, rng).concepts;
}

std::vector<double> path_step_probs(const ModelParams& params, const Episode& e,
                                    const std::vector<int>& concepts) {
    std::vector<int> positions;
    for (int c : concepts) {
        auto it = std::find(e.candidates.begin(), e.candidates.end(), c);
        if (it == e.candidates.end())
            throw ValidationError("path concept not in the candidate set");
        positions.push_back(static_cast<int>(it - e.candidates.begin()));
    }
    Tape tape;
    LiftedParams lp = lift(tape, params);
    Rng rng(0);
    return roll_path(tape, lp, params.config, e, DecodeMode::sample, rng, false, &positions)
        .step_probs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "set-to-sequence learning-path recommender core";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DegenerateEpisodeError>(m, "DegenerateEpisodeError",
                                                   PyExc_RuntimeError);

    py::class_<WorldConfig>(m, "World")
        .def_readonly("num_concepts", &WorldConfig::num_concepts)
        .def_readwrite("base_gain", &WorldConfig::base_gain)
        .def_readwrite("decay", &WorldConfig::decay)
        .def_readwrite("noise_std", &WorldConfig::noise_std)
        .def_readwrite("init_mastery", &WorldConfig::init_mastery)
        .def_readwrite("bernoulli_feedback", &WorldConfig::bernoulli_feedback)
        .def_property_readonly("difficulty",
                               [](const WorldConfig& w) { return w.difficulty; })
        .def_property_readonly("influence", [](const WorldConfig& w) {
            std::vector<std::vector<double>> rows(static_cast<size_t>(w.num_concepts));
            for (int a = 0; a < w.num_concepts; ++a) {
                rows[static_cast<size_t>(a)].resize(static_cast<size_t>(w.num_concepts));
                for (int b = 0; b < w.num_concepts; ++b)
                    rows[static_cast<size_t>(a)][static_cast<size_t>(b)] = w.influence.at(a, b);
            }
            return rows;
        })
        .def("__repr__", [](const WorldConfig& w) {
            return "<World num_concepts=" + std::to_string(w.num_concepts) + ">";
        });

    m.def("preset_world", &preset_world, py::arg("name"), py::arg("num_concepts"),
          py::arg("seed"), "Build one of the shipped influence presets.");

    py::class_<HistoryItem>(m, "HistoryItem")
        .def(py::init<int, double>(), py::arg("concept_id"), py::arg("y"))
        .def_readwrite("concept_id", &HistoryItem::concept_id)
        .def_readwrite("y", &HistoryItem::y)
        .def("__repr__", [](const HistoryItem& h) {
            return "HistoryItem(" + std::to_string(h.concept_id) + ", " +
                   std::to_string(h.y) + ")";
        });

    py::class_<Episode>(m, "Episode")
        .def(py::init<>())
        .def_readwrite("history", &Episode::history)
        .def_readwrite("candidates", &Episode::candidates)
        .def_readwrite("targets", &Episode::targets)
        .def_readwrite("path_len", &Episode::path_len);

    py::class_<SimOutcome>(m, "Outcome")
        .def_readonly("e_b", &SimOutcome::e_b)
        .def_readonly("e_e", &SimOutcome::e_e)
        .def_readonly("e_sup", &SimOutcome::e_sup)
        .def_readonly("e_t", &SimOutcome::e_t)
        .def_readonly("feedback", &SimOutcome::feedback);

    py::class_<TrainRecord>(m, "TrainRecord")
        .def_readonly("epoch", &TrainRecord::epoch)
        .def_readonly("mean_sampled_et", &TrainRecord::mean_sampled_et)
        .def_readonly("greedy_et", &TrainRecord::greedy_et)
        .def_readonly("loss_pg", &TrainRecord::loss_pg)
        .def_readonly("loss_kt", &TrainRecord::loss_kt)
        .def_readonly("grad_norm", &TrainRecord::grad_norm)
        .def_readonly("lr", &TrainRecord::lr);

    m.def("sample_episodes", &sample_episodes, py::arg("world"), py::arg("scenario"),
          py::arg("path_length"), py::arg("count"), py::arg("seed"),
          py::arg("candidate_size") = 0,
          "Draw evaluation episodes from the same streams the experiment grid uses.");

    m.def(
        "run_path",
        [](const WorldConfig& w, const History& history, const std::vector<int>& path,
           const std::vector<int>& targets, uint64_t seed) {
            Rng rng(seed);
            return run_path(w, history, path, targets, rng);
        },
        py::arg("world"), py::arg("history"), py::arg("path"), py::arg("targets"),
        py::arg("seed") = 0, "Simulate one full episode and report the learning effect.");

    m.def(
        "brute_force_optimal",
        [](const WorldConfig& w, const History& history, const std::vector<int>& candidates,
           int n, const std::vector<int>& targets, uint64_t cap) {
            return brute_force_optimal(w, history, candidates, n, targets, cap);
        },
        py::arg("world"), py::arg("history"), py::arg("candidates"), py::arg("n"),
        py::arg("targets"), py::arg("cap") = 50000,
        "Exhaustive best path; deterministic worlds only.");

    m.def(
        "random_path",
        [](const Episode& e, uint64_t seed) {
            Rng rng(seed);
            return random_policy(e, rng).path;
        },
        py::arg("episode"), py::arg("seed"));

    m.def(
        "rule_path",
        [](const Episode& e, const WorldConfig& w, bool ascending) {
            return rule_based_policy(e, w, ascending).path;
        },
        py::arg("episode"), py::arg("world"), py::arg("ascending") = true,
        "One-step effect ranking; ascending emits weakest-effect first.");

    m.def(
        "mpc_path",
        [](const Episode& e, const WorldConfig& w, int budget, uint64_t seed) {
            Rng rng(seed);
            return mpc_policy(e, w, budget, rng).path;
        },
        py::arg("episode"), py::arg("world"), py::arg("budget") = 16, py::arg("seed") = 0);

    py::class_<ModelParams>(m, "Model")
        .def_property_readonly(
            "num_concepts",
            [](const ModelParams& p) { return p.config.num_concepts; })
        .def_property_readonly(
            "encoder_variant",
            [](const ModelParams& p) { return std::string(to_string(p.config.encoder_variant)); })
        .def("greedy_path", &greedy_path, py::arg("episode"),
             "Argmax decoding; consumes no randomness.")
        .def("path_step_probs", &path_step_probs, py::arg("episode"), py::arg("path"),
             "Per-step probabilities the policy assigns to a given path.")
        .def("save", [](const ModelParams& p, const std::string& path) {
            save_checkpoint(p, path);
        });

    m.def("load_model", &load_checkpoint, py::arg("path"));

    m.def("train_model", &train_model, py::arg("world"), py::arg("scenario"),
          py::arg("path_length"), py::arg("epochs"), py::arg("batch_size") = 16,
          py::arg("seed") = 0, py::arg("embed_dim") = 8, py::arg("lstm_hidden") = 8,
          py::arg("score_dim") = 8, py::arg("encoder_variant") = "combined",
          py::arg("beta") = 1, py::arg("lr_start") = 1e-3, py::arg("lr_end") = 1e-5,
          py::arg("l2") = 4e-5, py::arg("candidate_size") = 0, py::arg("optimizer") = "adam",
          py::arg("baseline_subtraction") = false, py::arg("holdout_episodes") = 2,
          py::arg("dropout_rate") = 0.5,
          "REINFORCE training; returns (model, per-epoch records).");
}
