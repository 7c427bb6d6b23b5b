#pragma once

#include <string>
#include <vector>

#include "srcrec/tensor.hpp"
#include "srcrec/types.hpp"

namespace srcrec {

// SRC / SRC_A / SRC_M: full encoder, attention branch only, MLP branch only.
enum class EncoderVariant { combined, attention_only, mlp_only };

EncoderVariant encoder_variant_from_string(const std::string& s);
const char* to_string(EncoderVariant v);

struct ModelConfig {
    int num_concepts = 0;
    int embed_dim = 64;
    int lstm_hidden = 64;
    int score_dim = 64;
    double dropout_rate = 0.5;
    EncoderVariant encoder_variant = EncoderVariant::combined;

    // Width of one encoder output row; also the LSTM input width, since the
    // decoder feeds encoder rows back into the state update.
    int enc_out() const {
        return encoder_variant == EncoderVariant::combined ? 2 * embed_dim : embed_dim;
    }
    void validate() const;
};

// Every trainable matrix, in a fixed order so the optimizer, the L2 term,
// the checkpoint format and the gradient checker all walk the same list.
enum class ParamId {
    embedding,       // num_concepts x d
    attn_query,      // d x d
    attn_key,        // d x d
    attn_value,      // d x d
    enc_w1,          // d x d
    enc_b1,          // 1 x d
    enc_w2,          // d x d
    enc_b2,          // 1 x d
    hist_proj,       // (d+1) x enc_out
    lstm_wx,         // enc_out x 4*hidden
    lstm_wh,         // hidden x 4*hidden
    lstm_b,          // 1 x 4*hidden
    score_w_state,   // hidden x a
    score_w_cand,    // enc_out x a
    score_w_target,  // d x a
    score_b,         // 1 x a
    score_v,         // a x 1
    kt_w1,           // hidden x a
    kt_b1,           // 1 x a
    kt_w2,           // a x 1
    kt_b2,           // 1 x 1
};

constexpr int kNumParams = 21;

const char* param_name(ParamId id);

struct ModelParams {
    ModelConfig config;
    std::vector<Matrix> w;  // indexed by ParamId, always kNumParams entries

    Matrix& operator[](ParamId id) { return w[static_cast<size_t>(id)]; }
    const Matrix& operator[](ParamId id) const { return w[static_cast<size_t>(id)]; }

    // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases,
    // LSTM forget-gate bias block at +1.
    static ModelParams init(const ModelConfig& config, Rng& rng);

    // Expected shape of each matrix under `config`.
    static std::vector<Matrix> shapes(const ModelConfig& config);
};

// Versioned JSON checkpoint; doubles survive a save/load round trip bit-exact.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

// Parameter matrices lifted onto a tape for one differentiable rollout.
struct LiftedParams {
    std::vector<Value> v;
    Value operator[](ParamId id) const { return v[static_cast<size_t>(id)]; }
};

LiftedParams lift(Tape& tape, const ModelParams& params);

// Per-candidate representations, one row per candidate:
//   attention branch  softmax(QK^T/sqrt(d)) V
//   MLP branch        f_l(X) plus the mean of its own rows broadcast back
//   combined          column concat of the two
// Dropout acts on the MLP hidden layer and only when training.
Value encode(Tape& tape, const LiftedParams& p, const ModelConfig& config,
             const std::vector<int>& candidates, bool training, Rng& rng);

// Runs the shared LSTM over [x_c ; y] * W_h in chronological order from the
// zero state. Empty history stays at the zero state.
LstmState init_state(Tape& tape, const LiftedParams& p, const ModelConfig& config,
                     const History& history);

struct DecoderState {
    LstmState lstm;
    BoolMask selected;  // positions of S already placed on the path
};

// d_j = v^T tanh(W_state h + W_cand e_j + W_target x_T + b), one row per
// candidate, returned as an m x 1 column. Selection state does not enter;
// masking happens in the distribution step.
Value step_scores(const LiftedParams& p, const DecoderState& state, Value enc,
                  Value target_embed);

// Masked softmax over the not-yet-selected candidates.
Value step_distribution(Value scores, const DecoderState& state);

// sigmoid(f_y(h)): predicted mastery probability after the step.
Value kt_predict(const LiftedParams& p, Value state_h);

enum class DecodeMode { sample, greedy };

// One decoded path. The *_nodes handles live on the rollout tape and feed
// the loss; the plain vectors survive the tape.
struct PathSample {
    std::vector<int> positions;  // indices into episode.candidates
    std::vector<int> concepts;   // the same steps as concept ids
    std::vector<double> step_probs;
    std::vector<double> step_logprobs;  // log of clamped probabilities
    std::vector<double> kt_preds;
    std::vector<Value> step_prob_nodes;
    std::vector<Value> kt_pred_nodes;

    double logprob_sum() const {
        double s = 0.0;
        for (double x : step_logprobs) s += x;
        return s;
    }
};

// Decodes a full path of episode.path_len steps. `sample` draws each step
// from the step distribution via `rng`; `greedy` takes the argmax with
// smallest-index tie-break and consumes no randomness. `forced_positions`
// replays a fixed path (probabilities still computed from the current
// parameters), which makes the loss a deterministic function of the
// parameters for gradient checking.
PathSample roll_path(Tape& tape, const LiftedParams& p, const ModelConfig& config,
                     const Episode& episode, DecodeMode mode, Rng& rng,
                     bool training = false,
                     const std::vector<int>* forced_positions = nullptr);

}  // namespace srcrec
