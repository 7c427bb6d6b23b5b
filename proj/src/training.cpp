#include "srcrec/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace srcrec {

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adam") return Optimizer::adam;
    throw ValidationError("unknown optimizer: " + s);
}

const char* to_string(Optimizer o) {
    return o == Optimizer::sgd ? "sgd" : "adam";
}

void TrainConfig::validate(const WorldConfig& world) const {
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(lr_start > 0.0) || !(lr_end > 0.0))
        throw ValidationError("learning rates must be positive");
    if (l2 < 0.0) throw ValidationError("l2 must be >= 0");
    if (beta != 0 && beta != 1) throw ValidationError("beta must be 0 or 1");
    if (path_length < 1) throw ValidationError("path_length must be >= 1");
    if (scenario < 0 || scenario > 3) throw ValidationError("scenario must be in 0..3");
    if (holdout_episodes < 1) throw ValidationError("holdout_episodes must be >= 1");
    int mm = m();
    if (mm < path_length)
        throw ValidationError("candidate_size smaller than path_length");
    if (scenario != 3 && mm > world.num_concepts)
        throw ValidationError("candidate_size exceeds the concept universe");
    if (scenario == 3 && path_length > world.num_concepts)
        throw ValidationError("path_length exceeds the concept universe");
}

// ---- losses -----------------------------------------------------------------

Value policy_loss(const PathSample& sample, double reward) {
    if (sample.step_prob_nodes.empty())
        throw ValidationError("policy loss over an empty path");
    Value s = log(sample.step_prob_nodes[0]);
    for (size_t i = 1; i < sample.step_prob_nodes.size(); ++i)
        s = add(s, log(sample.step_prob_nodes[i]));
    return scale(s, -reward);
}

Value kt_loss(const PathSample& sample, const std::vector<double>& feedback) {
    if (sample.kt_pred_nodes.size() != feedback.size())
        throw ValidationError("KT feedback length does not match the path");
    if (sample.kt_pred_nodes.empty())
        throw ValidationError("KT loss over an empty path");
    Value s = bce(sample.kt_pred_nodes[0], feedback[0]);
    for (size_t i = 1; i < sample.kt_pred_nodes.size(); ++i)
        s = add(s, bce(sample.kt_pred_nodes[i], feedback[i]));
    return s;
}

Value l2_penalty(const LiftedParams& params, double weight) {
    Value s = sum_sq(params.v[0]);
    for (size_t i = 1; i < params.v.size(); ++i) s = add(s, sum_sq(params.v[i]));
    return scale(s, weight);
}

Value total_loss(const LiftedParams& params, const PathSample& sample,
                 const SimOutcome& outcome, int beta, double l2,
                 double effective_reward) {
    Value loss = policy_loss(sample, effective_reward);
    if (beta != 0) loss = add(loss, kt_loss(sample, outcome.feedback));
    if (l2 != 0.0) loss = add(loss, l2_penalty(params, l2));
    return loss;
}

// ---- optimizers -------------------------------------------------------------

AdamState AdamState::make(const ModelParams& params) {
    AdamState s;
    s.m.reserve(params.w.size());
    s.v.reserve(params.w.size());
    for (const auto& w : params.w) {
        s.m.push_back(Matrix::zeros(w.rows, w.cols));
        s.v.push_back(Matrix::zeros(w.rows, w.cols));
    }
    return s;
}

void sgd_step(ModelParams& params, const std::vector<Matrix>& grads, double lr) {
    if (grads.size() != params.w.size())
        throw DimensionError("gradient list does not match the parameter list");
    for (size_t k = 0; k < grads.size(); ++k) {
        Matrix& w = params.w[k];
        const Matrix& g = grads[k];
        if (!w.same_shape(g)) throw DimensionError("gradient shape mismatch");
        for (int i = 0; i < w.size(); ++i)
            w.data[static_cast<size_t>(i)] -= lr * g.data[static_cast<size_t>(i)];
    }
}

void adam_step(ModelParams& params, const std::vector<Matrix>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (grads.size() != params.w.size())
        throw DimensionError("gradient list does not match the parameter list");
    state.t += 1;
    double bc1 = 1.0 - std::pow(beta1, state.t);
    double bc2 = 1.0 - std::pow(beta2, state.t);
    for (size_t k = 0; k < grads.size(); ++k) {
        Matrix& w = params.w[k];
        const Matrix& g = grads[k];
        Matrix& m = state.m[k];
        Matrix& v = state.v[k];
        if (!w.same_shape(g)) throw DimensionError("gradient shape mismatch");
        for (int i = 0; i < w.size(); ++i) {
            size_t s = static_cast<size_t>(i);
            m.data[s] = beta1 * m.data[s] + (1.0 - beta1) * g.data[s];
            v.data[s] = beta2 * v.data[s] + (1.0 - beta2) * g.data[s] * g.data[s];
            double mhat = m.data[s] / bc1;
            double vhat = v.data[s] / bc2;
            w.data[s] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double lr_at_epoch(const TrainConfig& tc, int epoch) {
    if (tc.epochs <= 1) return tc.lr_start;
    double frac = static_cast<double>(epoch) / static_cast<double>(tc.epochs - 1);
    return tc.lr_start * std::pow(tc.lr_end / tc.lr_start, frac);
}

// ---- episode sampling -------------------------------------------------------

EpisodeSampler::EpisodeSampler(const WorldConfig& world, const TrainConfig& tc)
    : world_(world), tc_(tc) {
    world.validate();
    tc.validate(world);
    int n = world.num_concepts;
    int m = tc.m();
    if (tc.scenario == 0) {
        Rng rng = Rng::derive(tc.seed, kFixedSubsetStream);
        fixed_subset_ = rng.sample_distinct(n, m);
    } else if (tc.scenario == 1) {
        Rng rng = Rng::derive(tc.seed, kPartitionStream);
        std::vector<int> order = rng.sample_distinct(n, n);
        // groups of m in shuffled order; the tail that cannot fill a group
        // is held out entirely
        for (int start = 0; start + m <= n; start += m)
            groups_.emplace_back(order.begin() + start, order.begin() + start + m);
    }
}

Episode EpisodeSampler::sample(uint64_t stream) const {
    Rng rng = Rng::derive(tc_.seed, stream);
    return sample_with(rng);
}

Episode EpisodeSampler::sample_with(Rng& rng) const {
    int n = world_.num_concepts;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Episode e;
        e.path_len = tc_.path_length;

        // history: a short random study walk with feedback simulated live
        int hist_len = rng.uniform_int(0, 10);
        StudentState scratch = spawn_student(world_, {}, rng);
        for (int i = 0; i < hist_len; ++i) {
            int c = rng.uniform_int(0, n - 1);
            double y = learn_step(world_, scratch, c, rng);
            e.history.push_back({c, y});
        }

        switch (tc_.scenario) {
            case 0: e.candidates = fixed_subset_; break;
            case 1:
                e.candidates =
                    groups_[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(groups_.size()) - 1))];
                break;
            case 2: e.candidates = rng.sample_distinct(n, tc_.m()); break;
            case 3:
                e.candidates.resize(static_cast<size_t>(n));
                for (int i = 0; i < n; ++i) e.candidates[static_cast<size_t>(i)] = i;
                break;
            default: throw ValidationError("scenario must be in 0..3");
        }

        e.targets = rng.sample_distinct(n, rng.uniform_int(1, std::min(3, n)));

        // at least one target must be teachable this episode; exams only move
        // through concepts the path can actually contain
        bool reachable = false;
        for (int t : e.targets)
            for (int c : e.candidates)
                if (t == c) { reachable = true; break; }
        if (!reachable) continue;

        // reject students that already ace the target exam
        Rng probe(0);
        StudentState st = spawn_student(world_, e.history, probe);
        if (exam(world_, st, e.targets) >= 1.0) continue;
        return e;
    }
    throw ValidationError("episode sampling kept hitting the mastery ceiling");
}

// ---- the loop ---------------------------------------------------------------

namespace {

std::vector<Matrix> zero_grads(const ModelParams& params) {
    std::vector<Matrix> g;
    g.reserve(params.w.size());
    for (const auto& w : params.w) g.push_back(Matrix::zeros(w.rows, w.cols));
    return g;
}

void dump_batch(const std::string& path, int epoch,
                const std::vector<Episode>& episodes,
                const std::vector<PathSample>& samples,
                const std::vector<double>& rewards, double loss_value) {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["loss"] = std::isfinite(loss_value) ? nlohmann::json(loss_value)
                                          : nlohmann::json("non-finite");
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (size_t i = 0; i < episodes.size(); ++i) {
        nlohmann::ordered_json it;
        const Episode& e = episodes[i];
        nlohmann::ordered_json hist = nlohmann::ordered_json::array();
        for (const auto& h : e.history) hist.push_back({{"concept", h.concept_id}, {"y", h.y}});
        it["history"] = std::move(hist);
        it["candidates"] = e.candidates;
        it["targets"] = e.targets;
        if (i < samples.size()) {
            it["path"] = samples[i].concepts;
            it["step_probs"] = samples[i].step_probs;
        }
        if (i < rewards.size()) it["reward"] = rewards[i];
        items.push_back(std::move(it));
    }
    j["batch"] = std::move(items);
    std::ofstream out(path);
    if (out) out << j.dump(1) << "\n";
}

}  // namespace

TrainResult train(const ModelParams& initial, const WorldConfig& world,
                  const TrainConfig& tc) {
    world.validate();
    initial.config.validate();
    tc.validate(world);

    TrainResult result;
    result.params = initial;
    if (tc.epochs == 0) return result;

    EpisodeSampler sampler(world, tc);
    AdamState adam = AdamState::make(result.params);

    // held-out set, fixed for the whole run
    std::vector<Episode> holdout;
    for (int k = 0; k < tc.holdout_episodes; ++k)
        holdout.push_back(sampler.sample(kHoldoutStreamBase + static_cast<uint64_t>(k)));

    double reward_sum = 0.0;
    uint64_t reward_count = 0;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double lr = lr_at_epoch(tc, epoch);

        std::vector<Matrix> grads = zero_grads(result.params);
        std::vector<Episode> batch_eps;
        std::vector<PathSample> batch_samples;
        std::vector<double> batch_rewards;
        double sum_pg = 0.0, sum_kt = 0.0, sum_et = 0.0;

        for (int i = 0; i < tc.batch_size; ++i) {
            uint64_t g = static_cast<uint64_t>(epoch) * static_cast<uint64_t>(tc.batch_size) +
                         static_cast<uint64_t>(i);
            Episode ep = sampler.sample(2 * g);
            Rng roll_rng = Rng::derive(tc.seed, 2 * g + 1);

            Tape tape;
            LiftedParams lp = lift(tape, result.params);
            PathSample sample =
                roll_path(tape, lp, result.params.config, ep, DecodeMode::sample, roll_rng,
                          /*training=*/true);
            SimOutcome outcome = run_path(world, ep.history, sample.concepts, ep.targets,
                                          roll_rng);

            double baseline =
                (tc.baseline_subtraction && reward_count > 0)
                    ? reward_sum / static_cast<double>(reward_count)
                    : 0.0;
            double effective = outcome.e_t - baseline;
            reward_sum += outcome.e_t;
            reward_count += 1;

            Value pg = policy_loss(sample, effective);
            Value loss = pg;
            double kt_value = 0.0;
            if (tc.beta != 0) {
                Value kt = kt_loss(sample, outcome.feedback);
                kt_value = kt.scalar();
                loss = add(loss, kt);
            }
            if (tc.l2 != 0.0) loss = add(loss, l2_penalty(lp, tc.l2));
            double loss_value = loss.scalar();

            batch_eps.push_back(ep);
            batch_samples.push_back(sample);
            batch_rewards.push_back(outcome.e_t);

            if (!std::isfinite(loss_value)) {
                dump_batch(tc.divergence_dump_path, epoch, batch_eps, batch_samples,
                           batch_rewards, loss_value);
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                      "; batch dumped to " + tc.divergence_dump_path);
            }

            tape.backward(scale(loss, 1.0 / tc.batch_size));
            for (int k = 0; k < kNumParams; ++k) {
                const Matrix& gk = tape.grad(lp.v[static_cast<size_t>(k)]);
                Matrix& acc = grads[static_cast<size_t>(k)];
                for (int x = 0; x < gk.size(); ++x)
                    acc.data[static_cast<size_t>(x)] += gk.data[static_cast<size_t>(x)];
            }

            sum_et += outcome.e_t;
            sum_pg += pg.scalar();
            sum_kt += kt_value;
        }

        double grad_norm_sq = 0.0;
        for (const auto& gm : grads)
            for (double x : gm.data) grad_norm_sq += x * x;
        double grad_norm = std::sqrt(grad_norm_sq);
        if (!std::isfinite(grad_norm)) {
            dump_batch(tc.divergence_dump_path, epoch, batch_eps, batch_samples,
                       batch_rewards, grad_norm);
            throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch) +
                                  "; batch dumped to " + tc.divergence_dump_path);
        }

        if (tc.optimizer == Optimizer::adam)
            adam_step(result.params, grads, adam, lr);
        else
            sgd_step(result.params, grads, lr);

        // greedy evaluation on the held-out set; dropout off, no sampling
        double eval_sum = 0.0;
        for (size_t k = 0; k < holdout.size(); ++k) {
            Tape tape;
            LiftedParams lp = lift(tape, result.params);
            Rng eval_rng = Rng::derive(tc.seed, kHoldoutWorldBase + k);
            PathSample s = roll_path(tape, lp, result.params.config, holdout[k],
                                     DecodeMode::greedy, eval_rng);
            eval_sum += run_path(world, holdout[k].history, s.concepts,
                                 holdout[k].targets, eval_rng).e_t;
        }

        TrainRecord rec;
        rec.epoch = epoch;
        rec.mean_sampled_et = sum_et / tc.batch_size;
        rec.greedy_et = eval_sum / static_cast<double>(holdout.size());
        rec.loss_pg = sum_pg / tc.batch_size;
        rec.loss_kt = sum_kt / tc.batch_size;
        rec.grad_norm = grad_norm;
        rec.lr = lr;
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.records.push_back(rec);
    }
    return result;
}

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open records csv for writing: " + path);
    out << "epoch,mean_sampled_ET,greedy_ET,loss_pg,loss_kt,grad_norm,lr,seconds\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n",
                      r.epoch, r.mean_sampled_et, r.greedy_et, r.loss_pg, r.loss_kt,
                      r.grad_norm, r.lr, r.seconds);
        out << buf;
    }
}

void write_train_summary_json(const std::string& path, const TrainConfig& tc,
                              const std::vector<TrainRecord>& records) {
    nlohmann::ordered_json j;
    j["epochs"] = tc.epochs;
    j["batch_size"] = tc.batch_size;
    j["scenario"] = tc.scenario;
    j["beta"] = tc.beta;
    j["path_length"] = tc.path_length;
    j["candidate_size"] = tc.m();
    j["optimizer"] = to_string(tc.optimizer);
    j["seed"] = tc.seed;
    if (!records.empty()) {
        const TrainRecord& last = records.back();
        double best = -1e300;
        for (const auto& r : records) best = std::max(best, r.greedy_et);
        j["final_greedy_ET"] = last.greedy_et;
        j["best_greedy_ET"] = best;
        j["final_mean_sampled_ET"] = last.mean_sampled_et;
        j["final_loss_pg"] = last.loss_pg;
        j["final_loss_kt"] = last.loss_kt;
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open summary json for writing: " + path);
    out << j.dump(1) << "\n";
}

}  // namespace srcrec
