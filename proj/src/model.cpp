#include "srcrec/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace srcrec {

EncoderVariant encoder_variant_from_string(const std::string& s) {
    if (s == "combined") return EncoderVariant::combined;
    if (s == "attention_only") return EncoderVariant::attention_only;
    if (s == "mlp_only") return EncoderVariant::mlp_only;
    throw ValidationError("unknown encoder variant: " + s);
}

const char* to_string(EncoderVariant v) {
    switch (v) {
        case EncoderVariant::combined: return "combined";
        case EncoderVariant::attention_only: return "attention_only";
        case EncoderVariant::mlp_only: return "mlp_only";
    }
    return "combined";
}

void ModelConfig::validate() const {
    if (num_concepts < 1) throw ValidationError("num_concepts must be >= 1");
    if (embed_dim < 1 || lstm_hidden < 1 || score_dim < 1)
        throw ValidationError("model dimensions must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ValidationError("dropout_rate must lie in [0, 1)");
}

const char* param_name(ParamId id) {
    static const char* names[kNumParams] = {
        "embedding",      "attn_query",    "attn_key",       "attn_value",
        "enc_w1",         "enc_b1",        "enc_w2",         "enc_b2",
        "hist_proj",      "lstm_wx",       "lstm_wh",        "lstm_b",
        "score_w_state",  "score_w_cand",  "score_w_target", "score_b",
        "score_v",        "kt_w1",         "kt_b1",          "kt_w2",
        "kt_b2",
    };
    return names[static_cast<size_t>(id)];
}

std::vector<Matrix> ModelParams::shapes(const ModelConfig& c) {
    int d = c.embed_dim, h = c.lstm_hidden, a = c.score_dim, eo = c.enc_out();
    return {
        Matrix(c.num_concepts, d),  // embedding
        Matrix(d, d),               // attn_query
        Matrix(d, d),               // attn_key
        Matrix(d, d),               // attn_value
        Matrix(d, d),               // enc_w1
        Matrix(1, d),               // enc_b1
        Matrix(d, d),               // enc_w2
        Matrix(1, d),               // enc_b2
        Matrix(d + 1, eo),          // hist_proj
        Matrix(eo, 4 * h),          // lstm_wx
        Matrix(h, 4 * h),           // lstm_wh
        Matrix(1, 4 * h),           // lstm_b
        Matrix(h, a),               // score_w_state
        Matrix(eo, a),              // score_w_cand
        Matrix(d, a),               // score_w_target
        Matrix(1, a),               // score_b
        Matrix(a, 1),               // score_v
        Matrix(h, a),               // kt_w1
        Matrix(1, a),               // kt_b1
        Matrix(a, 1),               // kt_w2
        Matrix(1, 1),               // kt_b2
    };
}

namespace {

bool is_bias(ParamId id) {
    switch (id) {
        case ParamId::enc_b1:
        case ParamId::enc_b2:
        case ParamId::lstm_b:
        case ParamId::score_b:
        case ParamId::kt_b1:
        case ParamId::kt_b2:
            return true;
        default:
            return false;
    }
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
    config.validate();
    ModelParams p;
    p.config = config;
    p.w = shapes(config);
    for (int i = 0; i < kNumParams; ++i) {
        ParamId id = static_cast<ParamId>(i);
        Matrix& m = p.w[static_cast<size_t>(i)];
        if (is_bias(id)) continue;  // zero
        // fan_in is the input width the matrix multiplies; the embedding
        // table is a lookup, scaled by its row width instead
        int fan_in = (id == ParamId::embedding) ? m.cols : m.rows;
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& x : m.data) x = rng.uniform(-bound, bound);
    }
    // forget-gate block starts open
    Matrix& lb = p[ParamId::lstm_b];
    for (int j = config.lstm_hidden; j < 2 * config.lstm_hidden; ++j) lb.at(0, j) = 1.0;
    return p;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = "srcrec-checkpoint";
    j["version"] = 1;
    j["config"] = {
        {"num_concepts", params.config.num_concepts},
        {"embed_dim", params.config.embed_dim},
        {"lstm_hidden", params.config.lstm_hidden},
        {"score_dim", params.config.score_dim},
        {"dropout_rate", params.config.dropout_rate},
        {"encoder_variant", to_string(params.config.encoder_variant)},
    };
    nlohmann::ordered_json arrays;
    for (int i = 0; i < kNumParams; ++i) {
        const Matrix& m = params.w[static_cast<size_t>(i)];
        arrays[param_name(static_cast<ParamId>(i))] = {
            {"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
    }
    j["params"] = std::move(arrays);
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open checkpoint for writing: " + path);
    out << j.dump(1) << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    }
    if (j.value("format", "") != "srcrec-checkpoint")
        throw ValidationError("not a checkpoint file: " + path);
    if (j.value("version", 0) != 1)
        throw ValidationError("unsupported checkpoint version");

    const auto& jc = j.at("config");
    ModelConfig config;
    config.num_concepts = jc.at("num_concepts").get<int>();
    config.embed_dim = jc.at("embed_dim").get<int>();
    config.lstm_hidden = jc.at("lstm_hidden").get<int>();
    config.score_dim = jc.at("score_dim").get<int>();
    config.dropout_rate = jc.at("dropout_rate").get<double>();
    config.encoder_variant =
        encoder_variant_from_string(jc.at("encoder_variant").get<std::string>());
    config.validate();

    ModelParams p;
    p.config = config;
    p.w = ModelParams::shapes(config);
    const auto& arrays = j.at("params");
    for (int i = 0; i < kNumParams; ++i) {
        const char* name = param_name(static_cast<ParamId>(i));
        if (!arrays.contains(name))
            throw ValidationError(std::string("checkpoint missing parameter: ") + name);
        const auto& a = arrays.at(name);
        Matrix& m = p.w[static_cast<size_t>(i)];
        if (a.at("rows").get<int>() != m.rows || a.at("cols").get<int>() != m.cols)
            throw ValidationError(std::string("checkpoint shape mismatch for ") + name);
        auto data = a.at("data").get<std::vector<double>>();
        if (static_cast<int>(data.size()) != m.size())
            throw ValidationError(std::string("checkpoint data length mismatch for ") + name);
        m.data = std::move(data);
        if (!m.all_finite())
            throw ValidationError(std::string("non-finite values in checkpoint for ") + name);
    }
    return p;
}

LiftedParams lift(Tape& tape, const ModelParams& params) {
    LiftedParams lp;
    lp.v.reserve(kNumParams);
    for (const auto& m : params.w) lp.v.push_back(tape.input(m));
    return lp;
}

Value encode(Tape& tape, const LiftedParams& p, const ModelConfig& config,
             const std::vector<int>& candidates, bool training, Rng& rng) {
    if (candidates.empty()) throw ValidationError("empty candidate set");
    if (static_cast<int>(candidates.size()) > config.num_concepts)
        throw ValidationError("candidate set larger than the concept universe");
    std::set<int> seen(candidates.begin(), candidates.end());
    if (seen.size() != candidates.size())
        throw ValidationError("duplicate concept ids in candidate set");

    Value x = gather_rows(p[ParamId::embedding], candidates);

    Value attn{};
    if (config.encoder_variant != EncoderVariant::mlp_only) {
        Value q = matmul(x, p[ParamId::attn_query]);
        Value k = matmul(x, p[ParamId::attn_key]);
        Value v = matmul(x, p[ParamId::attn_value]);
        Value logits = scale(matmul(q, transpose(k)),
                             1.0 / std::sqrt(static_cast<double>(config.embed_dim)));
        attn = matmul(softmax_rows(logits), v);
    }

    Value mlp{};
    if (config.encoder_variant != EncoderVariant::attention_only) {
        Value hid = tanh(add_rowvec(matmul(x, p[ParamId::enc_w1]), p[ParamId::enc_b1]));
        hid = dropout(hid, config.dropout_rate, rng, training);
        Value el = add_rowvec(matmul(hid, p[ParamId::enc_w2]), p[ParamId::enc_b2]);
        mlp = add_rowvec(el, mean_rows(el));
    }

    switch (config.encoder_variant) {
        case EncoderVariant::attention_only: return attn;
        case EncoderVariant::mlp_only: return mlp;
        case EncoderVariant::combined: break;
    }
    return concat_cols(attn, mlp);
}

LstmState init_state(Tape& tape, const LiftedParams& p, const ModelConfig& config,
                     const History& history) {
    LstmState state{tape.constant(Matrix(1, config.lstm_hidden)),
                    tape.constant(Matrix(1, config.lstm_hidden))};
    for (const auto& item : history) {
        if (!(item.y >= 0.0 && item.y <= 1.0))
            throw ValidationError("history feedback outside [0, 1]");
        Value x = gather_rows(p[ParamId::embedding], {item.concept_id});
        Value xy = concat_cols(x, tape.constant(Matrix::from({{item.y}})));
        Value proj = matmul(xy, p[ParamId::hist_proj]);
        state = lstm_step(proj, state, p[ParamId::lstm_wx], p[ParamId::lstm_wh],
                          p[ParamId::lstm_b]);
    }
    return state;
}

Value step_scores(const LiftedParams& p, const DecoderState& state, Value enc,
                  Value target_embed) {
    Value base = add(add(matmul(state.lstm.h, p[ParamId::score_w_state]),
                         matmul(target_embed, p[ParamId::score_w_target])),
                     p[ParamId::score_b]);
    Value pre = tanh(add_rowvec(matmul(enc, p[ParamId::score_w_cand]), base));
    return matmul(pre, p[ParamId::score_v]);  // m x 1
}

Value step_distribution(Value scores, const DecoderState& state) {
    return masked_softmax(scores, state.selected.inverted());
}

Value kt_predict(const LiftedParams& p, Value state_h) {
    Value hid = tanh(add(matmul(state_h, p[ParamId::kt_w1]), p[ParamId::kt_b1]));
    return sigmoid(add(matmul(hid, p[ParamId::kt_w2]), p[ParamId::kt_b2]));
}

PathSample roll_path(Tape& tape, const LiftedParams& p, const ModelConfig& config,
                     const Episode& episode, DecodeMode mode, Rng& rng,
                     bool training, const std::vector<int>* forced_positions) {
    int m = static_cast<int>(episode.candidates.size());
    int n = episode.path_len;
    if (n < 1) throw ValidationError("path length must be >= 1");
    if (n > m) throw ValidationError("path length exceeds candidate set size");
    if (episode.targets.empty()) throw ValidationError("empty target set");
    if (forced_positions && static_cast<int>(forced_positions->size()) != n)
        throw ValidationError("forced path length mismatch");

    Value enc = encode(tape, p, config, episode.candidates, training, rng);
    Value xt = mean_rows(gather_rows(p[ParamId::embedding], episode.targets));
    DecoderState state{init_state(tape, p, config, episode.history), BoolMask(m, false)};

    PathSample out;
    for (int i = 0; i < n; ++i) {
        Value scores = step_scores(p, state, enc, xt);
        Value dist = step_distribution(scores, state);
        const Matrix& dv = dist.val();

        int pick = -1;
        if (forced_positions) {
            pick = (*forced_positions)[static_cast<size_t>(i)];
            if (pick < 0 || pick >= m || state.selected.at(pick))
                throw ValidationError("forced path repeats or leaves the candidate set");
        } else if (mode == DecodeMode::greedy) {
            double best = -1.0;
            for (int j = 0; j < m; ++j) {
                if (state.selected.at(j)) continue;
                if (dv.data[static_cast<size_t>(j)] > best) {
                    best = dv.data[static_cast<size_t>(j)];
                    pick = j;
                }
            }
        } else {
            double u = rng.uniform01();
            double cum = 0.0;
            for (int j = 0; j < m; ++j) {
                if (state.selected.at(j)) continue;
                cum += dv.data[static_cast<size_t>(j)];
                if (u < cum) {
                    pick = j;
                    break;
                }
                pick = j;  // rounding guard: fall back to the last allowed
            }
        }

        Value pnode = entry(dist, pick, 0);
        state.selected.set(pick, true);
        state.lstm = lstm_step(row(enc, pick), state.lstm, p[ParamId::lstm_wx],
                               p[ParamId::lstm_wh], p[ParamId::lstm_b]);
        Value kt = kt_predict(p, state.lstm.h);

        double prob = pnode.scalar();
        out.positions.push_back(pick);
        out.concepts.push_back(episode.candidates[static_cast<size_t>(pick)]);
        out.step_probs.push_back(prob);
        out.step_logprobs.push_back(std::log(std::max(prob, 1e-7)));
        out.kt_preds.push_back(kt.scalar());
        out.step_prob_nodes.push_back(pnode);
        out.kt_pred_nodes.push_back(kt);
    }
    return out;
}

}  // namespace srcrec
