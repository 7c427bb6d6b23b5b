#include "srcrec/baselines.hpp"

#include <algorithm>
#include <functional>

namespace srcrec {

namespace {

void check_episode(const Episode& e) {
    int m = static_cast<int>(e.candidates.size());
    if (e.path_len < 1 || e.path_len > m)
        throw ValidationError("path length outside [1, |candidates|]");
    if (e.targets.empty()) throw ValidationError("empty target set");
}

// ordered completion count, saturated just above cap
uint64_t perm_count_capped(int universe, int k, uint64_t cap) {
    uint64_t x = 1;
    for (int i = 0; i < k; ++i) {
        x *= static_cast<uint64_t>(universe - i);
        if (x > cap) return cap + 1;
    }
    return x;
}

}  // namespace

PolicyOutput random_policy(const Episode& episode, Rng& rng) {
    check_episode(episode);
    std::vector<int> idx =
        rng.sample_distinct(static_cast<int>(episode.candidates.size()), episode.path_len);
    PolicyOutput out;
    out.method = "random";
    out.path.reserve(idx.size());
    for (int i : idx) out.path.push_back(episode.candidates[static_cast<size_t>(i)]);
    return out;
}

PolicyOutput rule_based_policy(const Episode& episode, const WorldConfig& world,
                               bool ascending) {
    if (world.noise_std != 0.0)
        throw PreconditionError("effect ranking needs a deterministic world");
    check_episode(episode);

    Rng dummy(0);
    StudentState base = spawn_student(world, episode.history, dummy);
    double before = exam(world, base, episode.targets);

    struct Ranked {
        int id;
        double effect;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(episode.candidates.size());
    for (int c : episode.candidates) {
        StudentState st = base;
        learn_step(world, st, c, dummy);
        ranked.push_back({c, exam(world, st, episode.targets) - before});
    }

    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.effect != b.effect) return a.effect > b.effect;
        return a.id < b.id;
    });
    ranked.resize(static_cast<size_t>(episode.path_len));
    std::sort(ranked.begin(), ranked.end(), [ascending](const Ranked& a, const Ranked& b) {
        if (a.effect != b.effect) return ascending ? a.effect < b.effect : a.effect > b.effect;
        return a.id < b.id;
    });

    PolicyOutput out;
    out.method = "rule_based";
    for (const Ranked& r : ranked) out.path.push_back(r.id);
    return out;
}

PolicyOutput mpc_policy(const Episode& episode, const WorldConfig& world,
                        int rollouts_per_step, Rng& rng) {
    if (rollouts_per_step < 1)
        throw PreconditionError("rollouts_per_step must be >= 1");
    check_episode(episode);

    WorldConfig nominal = world;
    nominal.noise_std = 0.0;
    Rng dummy(0);
    StudentState real = spawn_student(nominal, episode.history, dummy);
    double e_b = exam(nominal, real, episode.targets);
    if (e_b >= 1.0)
        throw DegenerateEpisodeError("exam already at the ceiling before the path");

    int m = static_cast<int>(episode.candidates.size());
    int n = episode.path_len;
    std::vector<char> used(static_cast<size_t>(m), 0);

    // final E_T of: the current real student learning `first`, then `completion`
    auto score = [&](int first, const std::vector<int>& completion) {
        StudentState clone = real;
        learn_step(nominal, clone, episode.candidates[static_cast<size_t>(first)], dummy);
        for (int pos : completion)
            learn_step(nominal, clone, episode.candidates[static_cast<size_t>(pos)], dummy);
        return (exam(nominal, clone, episode.targets) - e_b) / (1.0 - e_b);
    };

    PolicyOutput out;
    out.method = "mpc";
    for (int slot = 0; slot < n; ++slot) {
        int remaining = n - slot - 1;
        int best_pos = -1;
        double best_score = -1e300;
        for (int pos = 0; pos < m; ++pos) {
            if (used[static_cast<size_t>(pos)]) continue;
            std::vector<int> pool;
            for (int j = 0; j < m; ++j)
                if (!used[static_cast<size_t>(j)] && j != pos) pool.push_back(j);

            double total = 0.0;
            int count = 0;
            uint64_t budget = static_cast<uint64_t>(rollouts_per_step);
            if (perm_count_capped(static_cast<int>(pool.size()), remaining, budget) <= budget) {
                // few enough completions: walk them all, lexicographic in pool order
                std::vector<int> comp;
                std::vector<char> taken(pool.size(), 0);
                std::function<void()> walk = [&]() {
                    if (static_cast<int>(comp.size()) == remaining) {
                        total += score(pos, comp);
                        ++count;
                        return;
                    }
                    for (size_t j = 0; j < pool.size(); ++j) {
                        if (taken[j]) continue;
                        taken[j] = 1;
                        comp.push_back(pool[j]);
                        walk();
                        comp.pop_back();
                        taken[j] = 0;
                    }
                };
                walk();
            } else {
                for (int r = 0; r < rollouts_per_step; ++r) {
                    std::vector<int> picks =
                        rng.sample_distinct(static_cast<int>(pool.size()), remaining);
                    std::vector<int> comp;
                    comp.reserve(picks.size());
                    for (int j : picks) comp.push_back(pool[static_cast<size_t>(j)]);
                    total += score(pos, comp);
                    ++count;
                }
            }
            double mean = total / count;
            if (mean > best_score) {
                best_score = mean;
                best_pos = pos;
            }
        }
        used[static_cast<size_t>(best_pos)] = 1;
        int concept_id = episode.candidates[static_cast<size_t>(best_pos)];
        out.path.push_back(concept_id);
        learn_step(nominal, real, concept_id, dummy);
    }
    return out;
}

}  // namespace srcrec
