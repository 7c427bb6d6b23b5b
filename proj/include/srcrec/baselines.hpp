#pragma once

#include <string>
#include <vector>

#include "srcrec/types.hpp"
#include "srcrec/world.hpp"

namespace srcrec {

struct PolicyOutput {
    std::vector<int> path;  // ordered concepts, no repeats, all from the candidate set
    std::string method;
};

// uniform random ordered selection of path_len candidates
PolicyOutput random_policy(const Episode& episode, Rng& rng);

// rank candidates by their individual one-step exam gain on the targets, keep
// the top n, and emit them smallest effect first (concept id breaks ties).
// ascending=false emits largest first instead.
PolicyOutput rule_based_policy(const Episode& episode, const WorldConfig& world,
                               bool ascending = true);

// receding-horizon search: per slot, score every unselected candidate by the
// mean final E_T over random completions of the rest of the path (enumerated
// exhaustively whenever they fit the budget), then commit the best one.
// Planning always runs on a noise-free copy of the world; the rng only draws
// completions, so the caller's world and episode are never touched.
PolicyOutput mpc_policy(const Episode& episode, const WorldConfig& world,
                        int rollouts_per_step, Rng& rng);

}  // namespace srcrec
