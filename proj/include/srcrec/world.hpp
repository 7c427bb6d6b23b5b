#pragma once

#include <string>
#include <utility>
#include <vector>

#include "srcrec/tensor.hpp"
#include "srcrec/types.hpp"

namespace srcrec {

// Synthetic student environment. Latent mastery per concept; learning a
// concept raises its mastery by an amount gated by prerequisite mastery
// (through `influence`) and damped near saturation; every step applies a
// global retention decay.
struct WorldConfig {
    int num_concepts = 0;
    Matrix influence;                // N x N, [0,1], zero diagonal
    std::vector<double> difficulty;  // per concept, readiness offset
    double base_gain = 0.3;
    double decay = 0.995;            // retention per step
    double noise_std = 0.0;
    double init_mastery = 0.1;
    bool bernoulli_feedback = false;  // y drawn as a correctness coin flip
    uint64_t seed = 0;

    void validate() const;
};

// Latent; visible only to the simulator itself and the oracle, never to the
// recommender.
struct StudentState {
    std::vector<double> mastery;  // per concept, in [0,1]
};

struct SimOutcome {
    double e_b = 0.0;
    double e_e = 0.0;
    double e_sup = 1.0;
    double e_t = 0.0;
    std::vector<double> feedback;  // y per path step
};

// Baseline mastery everywhere, then H replayed: mastery[c] <- max(mastery[c], y)
// followed by one decay step per item.
StudentState spawn_student(const WorldConfig& world, const History& history, Rng& rng);

// One study interaction. Returns the feedback y for the step (post-update
// mastery, or a Bernoulli draw from it when the world says so).
double learn_step(const WorldConfig& world, StudentState& state, int concept_id, Rng& rng);

// Mean mastery over the targets. Pure.
double exam(const WorldConfig& world, const StudentState& state,
            const std::vector<int>& targets);

// Full episode: spawn, exam, study the path, exam again, learning effect
// (E_e - E_b) / (E_sup - E_b) with E_sup = 1. A student already at the
// ceiling (E_b >= 1) throws DegenerateEpisodeError; callers resample.
SimOutcome run_path(const WorldConfig& world, const History& history,
                    const std::vector<int>& path, const std::vector<int>& targets,
                    Rng& rng);

// Exhaustive search over all ordered n-selections from `candidates`,
// lexicographic by candidate position, first best kept. Deterministic
// worlds only.
std::pair<std::vector<int>, double> brute_force_optimal(
    const WorldConfig& world, const History& history,
    const std::vector<int>& candidates, int n, const std::vector<int>& targets,
    uint64_t cap = 50000);

// Shipped influence presets: "prereq-chain", "two-cluster", "random-sparse".
// The chain preset lays its chain over a seed-permuted concept order, so
// concept id order carries no information about the chain.
WorldConfig preset_world(const std::string& name, int num_concepts, uint64_t seed);

// N rows of N comma-separated values, row = source concept.
Matrix load_influence_csv(const std::string& path, int num_concepts);

}  // namespace srcrec
