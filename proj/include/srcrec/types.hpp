#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace srcrec {

// One past interaction: a studied concept and the observed mastery feedback.
// y is graded in [0,1], not binary.
struct HistoryItem {
    int concept_id = 0;
    double y = 0.0;
};

using History = std::vector<HistoryItem>;

// One recommendation instance: the learner's history H, the candidate set S
// to rank, the target set T the path should serve, and the path length n.
struct Episode {
    History history;
    std::vector<int> candidates;
    std::vector<int> targets;
    int path_len = 0;
};

// FNV-1a over a canonical byte serialization. Used to prove that two methods
// were evaluated on byte-identical episode streams.
class Fnv1a {
public:
    void feed_bytes(const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void feed(int32_t x) { feed_bytes(&x, sizeof x); }
    void feed(uint64_t x) { feed_bytes(&x, sizeof x); }
    void feed(double x) {
        uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        feed(bits);
    }
    uint64_t digest() const { return h_; }

private:
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline void hash_episode(Fnv1a& h, const Episode& e) {
    h.feed(static_cast<int32_t>(e.history.size()));
    for (const auto& it : e.history) {
        h.feed(static_cast<int32_t>(it.concept_id));
        h.feed(it.y);
    }
    h.feed(static_cast<int32_t>(e.candidates.size()));
    for (int c : e.candidates) h.feed(static_cast<int32_t>(c));
    h.feed(static_cast<int32_t>(e.targets.size()));
    for (int c : e.targets) h.feed(static_cast<int32_t>(c));
    h.feed(static_cast<int32_t>(e.path_len));
}

inline uint64_t episode_fingerprint(const std::vector<Episode>& eps) {
    Fnv1a h;
    h.feed(static_cast<int32_t>(eps.size()));
    for (const auto& e : eps) hash_episode(h, e);
    return h.digest();
}

inline std::string hex64(uint64_t x) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[x & 0xf];
        x >>= 4;
    }
    return s;
}

}  // namespace srcrec
