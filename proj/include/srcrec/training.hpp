#pragma once

#include <string>
#include <vector>

#include "srcrec/model.hpp"
#include "srcrec/world.hpp"

namespace srcrec {

// reserved Rng::derive stream ids; training batches use streams 2g and 2g+1
// counting up from zero, so everything else sits far above them
constexpr uint64_t kFixedSubsetStream = 0x5355425345540000ULL;
constexpr uint64_t kPartitionStream = 0x5041525449544EULL;
constexpr uint64_t kHoldoutStreamBase = 1ULL << 62;
constexpr uint64_t kHoldoutWorldBase = (1ULL << 62) + (1ULL << 61);

enum class Optimizer { sgd, adam };

Optimizer optimizer_from_string(const std::string& s);
const char* to_string(Optimizer o);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 128;
    double lr_start = 1e-3;
    double lr_end = 1e-5;  // reached at the final epoch, exponential decay
    double l2 = 4e-5;
    int beta = 1;  // KT task on/off
    int path_length = 20;
    int candidate_size = 0;  // |S| for scenarios 0..2; 0 means path_length
    int scenario = 0;        // candidate source p in {0,1,2,3}
    uint64_t seed = 0;
    bool baseline_subtraction = false;  // running-mean reward baseline
    Optimizer optimizer = Optimizer::adam;
    int holdout_episodes = 10;
    std::string divergence_dump_path = "divergence_dump.json";

    int m() const { return candidate_size > 0 ? candidate_size : path_length; }
    void validate(const WorldConfig& world) const;
};

struct TrainRecord {
    int epoch = 0;
    double mean_sampled_et = 0.0;
    double greedy_et = 0.0;
    double loss_pg = 0.0;
    double loss_kt = 0.0;
    double grad_norm = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

// ---- losses -----------------------------------------------------------------

// -reward * sum_i log p_{pi_i}, logs clamped at 1e-7.
Value policy_loss(const PathSample& sample, double reward);

// sum_i bce(p^y_i, y_i).
Value kt_loss(const PathSample& sample, const std::vector<double>& feedback);

// weight * sum over all parameter matrices of the squared entries.
Value l2_penalty(const LiftedParams& params, double weight);

// policy + beta * kt + l2. `effective_reward` is the reward after any
// baseline subtraction the caller applied.
Value total_loss(const LiftedParams& params, const PathSample& sample,
                 const SimOutcome& outcome, int beta, double l2,
                 double effective_reward);

// ---- optimizers -------------------------------------------------------------

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    int t = 0;
    static AdamState make(const ModelParams& params);
};

void sgd_step(ModelParams& params, const std::vector<Matrix>& grads, double lr);
void adam_step(ModelParams& params, const std::vector<Matrix>& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// lr_start at epoch 0 decaying exponentially to lr_end at the final epoch.
double lr_at_epoch(const TrainConfig& tc, int epoch);

// ---- episode sampling -------------------------------------------------------

// Draws (H, S, T) per the scenario. Scenario structures that must stay fixed
// for a whole run (the p=0 subset, the p=1 partition) are derived from the
// training seed at construction. Episodes whose starting exam is already at
// the ceiling are redrawn.
class EpisodeSampler {
public:
    EpisodeSampler(const WorldConfig& world, const TrainConfig& tc);

    // Deterministic: episode content comes from Rng::derive(seed, stream).
    Episode sample(uint64_t stream) const;
    Episode sample_with(Rng& rng) const;

    const std::vector<int>& fixed_subset() const { return fixed_subset_; }
    const std::vector<std::vector<int>>& groups() const { return groups_; }

private:
    const WorldConfig& world_;
    TrainConfig tc_;
    std::vector<int> fixed_subset_;          // scenario 0
    std::vector<std::vector<int>> groups_;   // scenario 1
};

// ---- the loop ---------------------------------------------------------------

struct TrainResult {
    ModelParams params;
    std::vector<TrainRecord> records;
};

// Algorithm: per epoch, sample a batch of episodes, roll one sampled path
// each, score it in the simulator, take one optimizer step on the batch-mean
// total loss, then evaluate greedy decoding on a fixed held-out episode set.
// A non-finite batch loss dumps the batch as JSON and throws DivergenceError.
TrainResult train(const ModelParams& initial, const WorldConfig& world,
                  const TrainConfig& tc);

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records);
void write_train_summary_json(const std::string& path, const TrainConfig& tc,
                              const std::vector<TrainRecord>& records);

}  // namespace srcrec
