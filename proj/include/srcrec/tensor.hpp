#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "srcrec/errors.hpp"
#include "srcrec/rng.hpp"

namespace srcrec {

// Dense row-major matrix of doubles. Everything in the model runs in f64;
// gradient checks at 1e-4 tolerance are not workable in f32.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
        if (r < 0 || c < 0) throw DimensionError("negative matrix dimension");
    }

    static Matrix zeros(int r, int c) { return Matrix(r, c, 0.0); }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    static Matrix from(std::initializer_list<std::initializer_list<double>> init);
    static Matrix row_vector(const std::vector<double>& v);
    static Matrix col_vector(const std::vector<double>& v);

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    int size() const { return rows * cols; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
    std::string shape_str() const;
};

// Per-position availability mask over a candidate set.
struct BoolMask {
    std::vector<char> allowed;

    BoolMask() = default;
    explicit BoolMask(int n, bool value = true) : allowed(static_cast<size_t>(n), value ? 1 : 0) {}

    int size() const { return static_cast<int>(allowed.size()); }
    bool at(int i) const { return allowed[static_cast<size_t>(i)] != 0; }
    void set(int i, bool v) { allowed[static_cast<size_t>(i)] = v ? 1 : 0; }
    int count_allowed() const {
        int n = 0;
        for (char c : allowed) n += (c != 0);
        return n;
    }
    BoolMask inverted() const {
        BoolMask m = *this;
        for (auto& c : m.allowed) c = c ? 0 : 1;
        return m;
    }
};

class Tape;

// Lightweight handle to a node on a tape.
struct Value {
    Tape* tape = nullptr;
    int idx = -1;

    bool valid() const { return tape != nullptr && idx >= 0; }
    const Matrix& val() const;
    int rows() const { return val().rows; }
    int cols() const { return val().cols; }
    // Convenience for 1x1 nodes.
    double scalar() const;
};

// Append-only record of a differentiable computation. Creation order is a
// topological order, so backward() is a single reverse sweep. A tape is
// rebuilt per episode; path lengths and masks change every step, so there is
// no static graph to reuse. Single-threaded per tape.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf node that participates in gradients (weights, inputs).
    Value input(Matrix m);
    // Leaf node treated as data; gradients still accumulate but callers
    // normally ignore them.
    Value constant(Matrix m) { return input(std::move(m)); }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
    // order. `loss` must be 1x1. Gradients of nodes the loss does not reach
    // stay zero.
    void backward(Value loss);

    const Matrix& value(Value v) const { return nodes_[static_cast<size_t>(v.idx)].value; }
    const Matrix& grad(Value v) const;

    size_t size() const { return nodes_.size(); }

    // Internal: used by the op free functions.
    Value emplace(Matrix value, std::function<void()> back);
    Matrix& grad_buffer(int idx) { return nodes_[static_cast<size_t>(idx)].grad; }
    const Matrix& value_at(int idx) const { return nodes_[static_cast<size_t>(idx)].value; }

private:
    struct Node {
        Matrix value;
        Matrix grad;  // allocated during backward()
        std::function<void()> back;
    };
    std::vector<Node> nodes_;
    bool swept_ = false;
};

// ---- elementwise / structural ops -----------------------------------------

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);  // elementwise
Value scale(Value a, double s);
Value matmul(Value a, Value b);
Value transpose(Value a);
Value sigmoid(Value a);
Value tanh(Value a);
// Natural log with the probability clamp: inputs below `floor` are treated
// as `floor` (zero gradient there), keeping log-prob terms finite.
Value log(Value a, double floor = 1e-7);
Value mean_rows(Value a);                    // 1 x cols
Value sum_all(Value a);                      // 1 x 1
Value sum_sq(Value a);                       // 1 x 1, sum of squares
Value add_rowvec(Value a, Value rowvec);     // broadcast-add a 1 x cols row
Value concat_cols(Value a, Value b);         // [a ; b] along columns
Value slice_cols(Value a, int start, int len);
Value row(Value a, int r);                   // 1 x cols
Value entry(Value a, int r, int c);          // 1 x 1
Value gather_rows(Value table, const std::vector<int>& ids);  // scatter-add backward
Value softmax_rows(Value a);                 // row-wise softmax, max-stabilized

// Softmax over the allowed entries of a score vector (n x 1 or 1 x n).
// Disallowed positions are exactly zero in the output and receive exactly
// zero gradient. Stabilized by subtracting the max over allowed entries.
Value masked_softmax(Value scores, const BoolMask& mask);

// Binary cross-entropy -(t log p + (1-t) log(1-p)) with p clamped to
// [eps, 1-eps]. `pred` must be 1x1; target must lie in [0, 1].
Value bce(Value pred, double target, double eps = 1e-7);

// Multiplies kept entries by 1/(1-rate) and zeroes the rest. Identity when
// not training or rate == 0. The mask is drawn once at op creation.
Value dropout(Value a, double rate, Rng& rng, bool training);

struct LstmState {
    Value h;
    Value c;
};

// One LSTM cell step composed from primitive tape ops.
// Gate layout along the 4H axis: input, forget, output, candidate.
LstmState lstm_step(Value input, LstmState state, Value wx, Value wh, Value bias);

// ---- gradient checking -----------------------------------------------------

struct GradCheckResult {
    double max_rel_err = 0.0;
    int param_index = -1;  // which matrix
    int entry_index = -1;  // flat index within it
    double analytic = 0.0;
    double numeric = 0.0;
};

// `f` must rebuild the same computation for the same parameter values
// (re-seed any RNG it uses). Central differences with step `eps`; the
// relative error is |analytic - cd| / max(|analytic|, |cd|, 1e-8).
GradCheckResult grad_check(
    const std::function<Value(Tape&, const std::vector<Value>&)>& f,
    const std::vector<Matrix>& params, double eps);

}  // namespace srcrec
