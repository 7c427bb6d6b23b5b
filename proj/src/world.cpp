#include "srcrec/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace srcrec {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void check_concept(const WorldConfig& w, int c) {
    if (c < 0 || c >= w.num_concepts)
        throw ValidationError("concept id " + std::to_string(c) + " outside the world");
}

uint64_t permutations(int m, int n, uint64_t cap) {
    uint64_t total = 1;
    for (int i = 0; i < n; ++i) {
        total *= static_cast<uint64_t>(m - i);
        if (total > cap) return cap + 1;  // early out, avoids overflow
    }
    return total;
}

}  // namespace

void WorldConfig::validate() const {
    if (num_concepts < 1) throw ValidationError("world needs at least one concept");
    if (influence.rows != num_concepts || influence.cols != num_concepts)
        throw ValidationError("influence matrix must be N x N");
    if (!influence.all_finite()) throw ValidationError("non-finite influence entries");
    for (int a = 0; a < num_concepts; ++a) {
        if (influence.at(a, a) != 0.0)
            throw ValidationError("influence diagonal must be zero");
        for (int b = 0; b < num_concepts; ++b) {
            double x = influence.at(a, b);
            if (x < 0.0 || x > 1.0)
                throw ValidationError("influence entries must lie in [0, 1]");
        }
    }
    if (static_cast<int>(difficulty.size()) != num_concepts)
        throw ValidationError("difficulty must have one entry per concept");
    for (double d : difficulty)
        if (!std::isfinite(d)) throw ValidationError("non-finite difficulty");
    if (!(base_gain > 0.0 && base_gain <= 1.0))
        throw ValidationError("base_gain must lie in (0, 1]");
    if (!(decay > 0.0 && decay <= 1.0))
        throw ValidationError("decay must lie in (0, 1]");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
        throw ValidationError("noise_std must be >= 0");
    if (!(init_mastery >= 0.0 && init_mastery < 1.0))
        throw ValidationError("init_mastery must lie in [0, 1)");
}

StudentState spawn_student(const WorldConfig& world, const History& history, Rng& rng) {
    (void)rng;  // spawning is deterministic; the parameter keeps the call shape uniform
    StudentState st;
    st.mastery.assign(static_cast<size_t>(world.num_concepts), world.init_mastery);
    for (const auto& item : history) {
        check_concept(world, item.concept_id);
        if (!(item.y >= 0.0 && item.y <= 1.0))
            throw ValidationError("history feedback outside [0, 1]");
        auto& m = st.mastery[static_cast<size_t>(item.concept_id)];
        m = std::max(m, item.y);
        for (auto& x : st.mastery) x *= world.decay;
    }
    return st;
}

double learn_step(const WorldConfig& world, StudentState& state, int concept_id, Rng& rng) {
    check_concept(world, concept_id);
    double contrib = 0.0;
    for (int a = 0; a < world.num_concepts; ++a)
        contrib += world.influence.at(a, concept_id) * state.mastery[static_cast<size_t>(a)];
    double readiness = sigmoid(contrib - world.difficulty[static_cast<size_t>(concept_id)]);
    double& m = state.mastery[static_cast<size_t>(concept_id)];
    double next = m + world.base_gain * readiness * (1.0 - m);
    if (world.noise_std > 0.0) next += rng.normal() * world.noise_std;
    m = std::clamp(next, 0.0, 1.0);
    for (auto& x : state.mastery) x *= world.decay;
    double y = state.mastery[static_cast<size_t>(concept_id)];
    if (world.bernoulli_feedback) y = (rng.uniform01() < y) ? 1.0 : 0.0;
    return y;
}

double exam(const WorldConfig& world, const StudentState& state,
            const std::vector<int>& targets) {
    if (targets.empty()) throw ValidationError("exam over an empty target set");
    double sum = 0.0;
    for (int t : targets) {
        check_concept(world, t);
        sum += state.mastery[static_cast<size_t>(t)];
    }
    return sum / static_cast<double>(targets.size());
}

SimOutcome run_path(const WorldConfig& world, const History& history,
                    const std::vector<int>& path, const std::vector<int>& targets,
                    Rng& rng) {
    for (size_t i = 0; i < path.size(); ++i) {
        check_concept(world, path[i]);
        for (size_t j = i + 1; j < path.size(); ++j)
            if (path[i] == path[j]) throw ValidationError("path repeats a concept");
    }
    StudentState st = spawn_student(world, history, rng);
    SimOutcome out;
    out.e_sup = 1.0;
    out.e_b = exam(world, st, targets);
    if (out.e_b >= out.e_sup)
        throw DegenerateEpisodeError("student already at the mastery ceiling");
    out.feedback.reserve(path.size());
    for (int c : path) out.feedback.push_back(learn_step(world, st, c, rng));
    out.e_e = exam(world, st, targets);
    out.e_t = (out.e_e - out.e_b) / (out.e_sup - out.e_b);
    return out;
}

std::pair<std::vector<int>, double> brute_force_optimal(
    const WorldConfig& world, const History& history,
    const std::vector<int>& candidates, int n, const std::vector<int>& targets,
    uint64_t cap) {
    if (world.noise_std != 0.0)
        throw PreconditionError("exhaustive search needs a deterministic world");
    int m = static_cast<int>(candidates.size());
    if (n < 1 || n > m) throw ValidationError("path length outside [1, |candidates|]");
    if (permutations(m, n, cap) > cap)
        throw PreconditionError("ordered selection count exceeds the enumeration cap");

    std::vector<int> pick(static_cast<size_t>(n), -1);
    std::vector<char> used(static_cast<size_t>(m), 0);
    std::vector<int> best_path;
    double best = -1e300;

    // depth-first in candidate-position order = lexicographic; strict
    // improvement keeps the lexicographically smallest argmax
    auto recurse = [&](auto&& self, int depth) -> void {
        if (depth == n) {
            std::vector<int> path;
            path.reserve(static_cast<size_t>(n));
            for (int pos : pick) path.push_back(candidates[static_cast<size_t>(pos)]);
            Rng rng(world.seed);
            double et = run_path(world, history, path, targets, rng).e_t;
            if (et > best) {
                best = et;
                best_path = path;
            }
            return;
        }
        for (int pos = 0; pos < m; ++pos) {
            if (used[static_cast<size_t>(pos)]) continue;
            used[static_cast<size_t>(pos)] = 1;
            pick[static_cast<size_t>(depth)] = pos;
            self(self, depth + 1);
            used[static_cast<size_t>(pos)] = 0;
        }
    };
    recurse(recurse, 0);
    return {best_path, best};
}

WorldConfig preset_world(const std::string& name, int num_concepts, uint64_t seed) {
    if (num_concepts < 2) throw ValidationError("presets need at least two concepts");
    WorldConfig w;
    w.num_concepts = num_concepts;
    w.influence = Matrix(num_concepts, num_concepts);
    w.difficulty.assign(static_cast<size_t>(num_concepts), 0.0);
    w.seed = seed;
    w.decay = 0.997;

    if (name == "prereq-chain") {
        // A study order hidden behind a seed permutation: each chain element
        // is gated by its one or two predecessors.
        Rng rng = Rng::derive(seed, 11);
        std::vector<int> order(static_cast<size_t>(num_concepts));
        for (int i = 0; i < num_concepts; ++i) order[static_cast<size_t>(i)] = i;
        rng.shuffle(order);
        w.base_gain = 0.5;
        for (int i = 0; i < num_concepts; ++i) {
            int c = order[static_cast<size_t>(i)];
            if (i == 0) {
                w.difficulty[static_cast<size_t>(c)] = 0.0;
            } else if (i == 1) {
                w.difficulty[static_cast<size_t>(c)] = 0.8;
                w.influence.at(order[0], c) = 1.0;
            } else {
                w.difficulty[static_cast<size_t>(c)] = 1.1;
                w.influence.at(order[static_cast<size_t>(i - 1)], c) = 1.0;
                w.influence.at(order[static_cast<size_t>(i - 2)], c) = 0.6;
            }
        }
    } else if (name == "two-cluster") {
        Rng rng = Rng::derive(seed, 13);
        std::vector<int> order(static_cast<size_t>(num_concepts));
        for (int i = 0; i < num_concepts; ++i) order[static_cast<size_t>(i)] = i;
        rng.shuffle(order);
        int half = num_concepts / 2;
        w.base_gain = 0.4;
        for (int i = 0; i < num_concepts; ++i) {
            int a = order[static_cast<size_t>(i)];
            w.difficulty[static_cast<size_t>(a)] = 0.9;
            for (int j = 0; j < num_concepts; ++j) {
                if (i == j) continue;
                bool same = (i < half) == (j < half);
                if (same) w.influence.at(a, order[static_cast<size_t>(j)]) = 0.5;
            }
        }
    } else if (name == "random-sparse") {
        Rng rng = Rng::derive(seed, 17);
        w.base_gain = 0.4;
        for (int a = 0; a < num_concepts; ++a)
            for (int b = 0; b < num_concepts; ++b) {
                if (a == b) continue;
                if (rng.uniform01() < 0.25)
                    w.influence.at(a, b) = rng.uniform(0.3, 1.0);
            }
        for (auto& d : w.difficulty) d = rng.uniform(0.4, 1.4);
    } else {
        throw ValidationError("unknown world preset: " + name);
    }
    w.validate();
    return w;
}

Matrix load_influence_csv(const std::string& path, int num_concepts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open influence csv: " + path);
    Matrix m(num_concepts, num_concepts);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        if (row >= num_concepts) throw ValidationError("influence csv has too many rows");
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= num_concepts)
                throw ValidationError("influence csv row has too many columns");
            try {
                m.at(row, col) = std::stod(cell);
            } catch (const std::exception&) {
                throw ValidationError("influence csv cell is not a number: " + cell);
            }
            ++col;
        }
        if (col != num_concepts)
            throw ValidationError("influence csv row has too few columns");
        ++row;
    }
    if (row != num_concepts) throw ValidationError("influence csv has too few rows");
    for (int i = 0; i < num_concepts; ++i)
        if (m.at(i, i) != 0.0) throw ValidationError("influence csv diagonal must be zero");
    return m;
}

}  // namespace srcrec
