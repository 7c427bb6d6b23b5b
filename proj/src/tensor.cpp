#include "srcrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace srcrec {

Matrix Matrix::from(std::initializer_list<std::initializer_list<double>> init) {
    Matrix m(static_cast<int>(init.size()),
             init.size() ? static_cast<int>(init.begin()->size()) : 0);
    int r = 0;
    for (const auto& rowv : init) {
        if (static_cast<int>(rowv.size()) != m.cols)
            throw DimensionError("ragged initializer");
        int c = 0;
        for (double x : rowv) m.at(r, c++) = x;
        ++r;
    }
    return m;
}

Matrix Matrix::row_vector(const std::vector<double>& v) {
    Matrix m(1, static_cast<int>(v.size()));
    m.data = v;
    return m;
}

Matrix Matrix::col_vector(const std::vector<double>& v) {
    Matrix m(static_cast<int>(v.size()), 1);
    m.data = v;
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string Matrix::shape_str() const {
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

const Matrix& Value::val() const {
    if (!valid()) throw ValidationError("use of an unbound Value handle");
    return tape->value(*this);
}

double Value::scalar() const {
    const Matrix& m = val();
    if (m.size() != 1) throw DimensionError("scalar() on a " + m.shape_str() + " node");
    return m.data[0];
}

Value Tape::input(Matrix m) {
    if (!m.all_finite()) throw ValidationError("non-finite entries in tape input");
    return emplace(std::move(m), nullptr);
}

Value Tape::emplace(Matrix value, std::function<void()> back) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(back)});
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::grad(Value v) const {
    const Node& n = nodes_[static_cast<size_t>(v.idx)];
    if (n.grad.size() == 0) {
        static thread_local Matrix zero;
        zero = Matrix::zeros(n.value.rows, n.value.cols);
        return zero;
    }
    return n.grad;
}

void Tape::backward(Value loss) {
    if (loss.tape != this) throw ValidationError("loss belongs to another tape");
    const Matrix& lv = value(loss);
    if (lv.size() != 1)
        throw DimensionError("backward() expects a 1x1 loss, got " + lv.shape_str());
    if (!std::isfinite(lv.data[0])) throw ValidationError("backward() on a non-finite loss");
    for (auto& n : nodes_) n.grad = Matrix::zeros(n.value.rows, n.value.cols);
    nodes_[static_cast<size_t>(loss.idx)].grad.data[0] = 1.0;
    for (int i = loss.idx; i >= 0; --i) {
        auto& n = nodes_[static_cast<size_t>(i)];
        if (n.back) n.back();
    }
    swept_ = true;
}

namespace {

Tape& common_tape(Value a, Value b) {
    if (a.tape == nullptr || a.tape != b.tape)
        throw ValidationError("operands live on different tapes");
    return *a.tape;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Ops record a closure over (tape, operand indices, output index). The
// output index is nodes_.size() at creation time; handles never move because
// the tape is append-only.
struct OpCtx {
    Tape* t;
    int out;
    const Matrix& og() const { return t->grad_buffer(out); }
    Matrix& g(int idx) const { return t->grad_buffer(idx); }
    const Matrix& v(int idx) const { return t->value_at(idx); }
};

Value make_op(Tape& t, Matrix out, const std::function<void(const OpCtx&)>& back) {
    OpCtx ctx{&t, static_cast<int>(t.size())};
    return t.emplace(std::move(out), [ctx, back]() { back(ctx); });
}

}  // namespace

Value add(Value a, Value b) {
    Tape& t = common_tape(a, b);
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (!av.same_shape(bv))
        throw DimensionError("add: " + av.shape_str() + " vs " + bv.shape_str());
    Matrix out = av;
    for (int i = 0; i < out.size(); ++i)
        out.data[static_cast<size_t>(i)] += bv.data[static_cast<size_t>(i)];
    int ai = a.idx, bi = b.idx;
    return make_op(t, std::move(out), [ai, bi](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        Matrix& gb = c.g(bi);
        for (int i = 0; i < og.size(); ++i) {
            ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)];
            gb.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)];
        }
    });
}

Value sub(Value a, Value b) {
    Tape& t = common_tape(a, b);
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (!av.same_shape(bv))
        throw DimensionError("sub: " + av.shape_str() + " vs " + bv.shape_str());
    Matrix out = av;
    for (int i = 0; i < out.size(); ++i)
        out.data[static_cast<size_t>(i)] -= bv.data[static_cast<size_t>(i)];
    int ai = a.idx, bi = b.idx;
    return make_op(t, std::move(out), [ai, bi](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        Matrix& gb = c.g(bi);
        for (int i = 0; i < og.size(); ++i) {
            ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)];
            gb.data[static_cast<size_t>(i)] -= og.data[static_cast<size_t>(i)];
        }
    });
}

Value mul(Value a, Value b) {
    Tape& t = common_tape(a, b);
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (!av.same_shape(bv))
        throw DimensionError("mul: " + av.shape_str() + " vs " + bv.shape_str());
    Matrix out = av;
    for (int i = 0; i < out.size(); ++i)
        out.data[static_cast<size_t>(i)] *= bv.data[static_cast<size_t>(i)];
    int ai = a.idx, bi = b.idx;
    return make_op(t, std::move(out), [ai, bi](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& av2 = c.v(ai);
        const Matrix& bv2 = c.v(bi);
        Matrix& ga = c.g(ai);
        Matrix& gb = c.g(bi);
        for (int i = 0; i < og.size(); ++i) {
            ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)] * bv2.data[static_cast<size_t>(i)];
            gb.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)] * av2.data[static_cast<size_t>(i)];
        }
    });
}

Value scale(Value a, double s) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (auto& x : out.data) x *= s;
    int ai = a.idx;
    return make_op(t, std::move(out), [ai, s](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.size(); ++i)
            ga.data[static_cast<size_t>(i)] += s * og.data[static_cast<size_t>(i)];
    });
}

Value matmul(Value a, Value b) {
    Tape& t = common_tape(a, b);
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (av.cols != bv.rows)
        throw DimensionError("matmul: " + av.shape_str() + " * " + bv.shape_str());
    Matrix out(av.rows, bv.cols);
    for (int i = 0; i < av.rows; ++i)
        for (int k = 0; k < av.cols; ++k) {
            double aik = av.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < bv.cols; ++j) out.at(i, j) += aik * bv.at(k, j);
        }
    int ai = a.idx, bi = b.idx;
    return make_op(t, std::move(out), [ai, bi](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& av2 = c.v(ai);
        const Matrix& bv2 = c.v(bi);
        Matrix& ga = c.g(ai);
        Matrix& gb = c.g(bi);
        // dL/da += og * b^T
        for (int i = 0; i < av2.rows; ++i)
            for (int j = 0; j < og.cols; ++j) {
                double gij = og.at(i, j);
                if (gij == 0.0) continue;
                for (int k = 0; k < av2.cols; ++k) ga.at(i, k) += gij * bv2.at(k, j);
            }
        // dL/db += a^T * og
        for (int i = 0; i < av2.rows; ++i)
            for (int k = 0; k < av2.cols; ++k) {
                double aik = av2.at(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < og.cols; ++j) gb.at(k, j) += aik * og.at(i, j);
            }
    });
}

Value transpose(Value a) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    Matrix out(av.cols, av.rows);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out.at(j, i) = av.at(i, j);
    int ai = a.idx;
    return make_op(t, std::move(out), [ai](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.rows; ++i)
            for (int j = 0; j < og.cols; ++j) ga.at(j, i) += og.at(i, j);
    });
}

Value sigmoid(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (auto& x : out.data) x = stable_sigmoid(x);
    int ai = a.idx;
    return make_op(t, std::move(out), [ai](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& ov = c.v(c.out);
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.size(); ++i) {
            double y = ov.data[static_cast<size_t>(i)];
            ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)] * y * (1.0 - y);
        }
    });
}

Value tanh(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (auto& x : out.data) x = std::tanh(x);
    int ai = a.idx;
    return make_op(t, std::move(out), [ai](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& ov = c.v(c.out);
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.size(); ++i) {
            double y = ov.data[static_cast<size_t>(i)];
            ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)] * (1.0 - y * y);
        }
    });
}

Value log(Value a, double floor) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (auto& x : out.data) x = std::log(std::max(x, floor));
    int ai = a.idx;
    return make_op(t, std::move(out), [ai, floor](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& av2 = c.v(ai);
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.size(); ++i) {
            double x = av2.data[static_cast<size_t>(i)];
            if (x > floor)
                ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)] / x;
        }
    });
}

Value mean_rows(Value a) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    if (av.rows == 0) throw DimensionError("mean_rows of an empty matrix");
    Matrix out(1, av.cols);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out.at(0, j) += av.at(i, j);
    for (int j = 0; j < av.cols; ++j) out.at(0, j) /= av.rows;
    int ai = a.idx;
    int nrows = av.rows;
    return make_op(t, std::move(out), [ai, nrows](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        for (int i = 0; i < nrows; ++i)
            for (int j = 0; j < og.cols; ++j) ga.at(i, j) += og.at(0, j) / nrows;
    });
}

Value sum_all(Value a) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    double s = 0.0;
    for (double x : av.data) s += x;
    int ai = a.idx;
    return make_op(t, Matrix::from({{s}}), [ai](const OpCtx& c) {
        double g = c.og().data[0];
        Matrix& ga = c.g(ai);
        for (auto& x : ga.data) x += g;
    });
}

Value sum_sq(Value a) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    double s = 0.0;
    for (double x : av.data) s += x * x;
    int ai = a.idx;
    return make_op(t, Matrix::from({{s}}), [ai](const OpCtx& c) {
        double g = c.og().data[0];
        const Matrix& av2 = c.v(ai);
        Matrix& ga = c.g(ai);
        for (int i = 0; i < av2.size(); ++i)
            ga.data[static_cast<size_t>(i)] += 2.0 * g * av2.data[static_cast<size_t>(i)];
    });
}

Value add_rowvec(Value a, Value rowvec) {
    Tape& t = common_tape(a, rowvec);
    const Matrix& av = a.val();
    const Matrix& rv = rowvec.val();
    if (rv.rows != 1 || rv.cols != av.cols)
        throw DimensionError("add_rowvec: " + av.shape_str() + " + " + rv.shape_str());
    Matrix out = av;
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out.at(i, j) += rv.at(0, j);
    int ai = a.idx, ri = rowvec.idx;
    return make_op(t, std::move(out), [ai, ri](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        Matrix& gr = c.g(ri);
        for (int i = 0; i < og.rows; ++i)
            for (int j = 0; j < og.cols; ++j) {
                ga.at(i, j) += og.at(i, j);
                gr.at(0, j) += og.at(i, j);
            }
    });
}

Value concat_cols(Value a, Value b) {
    Tape& t = common_tape(a, b);
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (av.rows != bv.rows)
        throw DimensionError("concat_cols: " + av.shape_str() + " | " + bv.shape_str());
    Matrix out(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
        for (int j = 0; j < av.cols; ++j) out.at(i, j) = av.at(i, j);
        for (int j = 0; j < bv.cols; ++j) out.at(i, av.cols + j) = bv.at(i, j);
    }
    int ai = a.idx, bi = b.idx;
    int acols = av.cols, bcols = bv.cols;
    return make_op(t, std::move(out), [ai, bi, acols, bcols](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        Matrix& gb = c.g(bi);
        for (int i = 0; i < og.rows; ++i) {
            for (int j = 0; j < acols; ++j) ga.at(i, j) += og.at(i, j);
            for (int j = 0; j < bcols; ++j) gb.at(i, j) += og.at(i, acols + j);
        }
    });
}

Value slice_cols(Value a, int start, int len) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    if (start < 0 || len < 0 || start + len > av.cols)
        throw DimensionError("slice_cols out of range");
    Matrix out(av.rows, len);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < len; ++j) out.at(i, j) = av.at(i, start + j);
    int ai = a.idx;
    return make_op(t, std::move(out), [ai, start, len](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.rows; ++i)
            for (int j = 0; j < len; ++j) ga.at(i, start + j) += og.at(i, j);
    });
}

Value row(Value a, int r) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    if (r < 0 || r >= av.rows) throw DimensionError("row index out of range");
    Matrix out(1, av.cols);
    for (int j = 0; j < av.cols; ++j) out.at(0, j) = av.at(r, j);
    int ai = a.idx;
    return make_op(t, std::move(out), [ai, r](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        for (int j = 0; j < og.cols; ++j) ga.at(r, j) += og.at(0, j);
    });
}

Value entry(Value a, int r, int cidx) {
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    if (r < 0 || r >= av.rows || cidx < 0 || cidx >= av.cols)
        throw DimensionError("entry index out of range");
    int ai = a.idx;
    return make_op(t, Matrix::from({{av.at(r, cidx)}}), [ai, r, cidx](const OpCtx& c) {
        c.g(ai).at(r, cidx) += c.og().data[0];
    });
}

Value gather_rows(Value table, const std::vector<int>& ids) {
    Tape& t = *table.tape;
    const Matrix& tv = table.val();
    Matrix out(static_cast<int>(ids.size()), tv.cols);
    for (size_t k = 0; k < ids.size(); ++k) {
        int id = ids[k];
        if (id < 0 || id >= tv.rows)
            throw ValidationError("gather_rows: id " + std::to_string(id) + " out of range");
        for (int j = 0; j < tv.cols; ++j) out.at(static_cast<int>(k), j) = tv.at(id, j);
    }
    int ti = table.idx;
    std::vector<int> ids_copy = ids;
    return make_op(t, std::move(out), [ti, ids_copy](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& gt = c.g(ti);
        for (size_t k = 0; k < ids_copy.size(); ++k)
            for (int j = 0; j < og.cols; ++j)
                gt.at(ids_copy[k], j) += og.at(static_cast<int>(k), j);
    });
}

Value softmax_rows(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (int i = 0; i < out.rows; ++i) {
        double mx = out.at(i, 0);
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out.at(i, j));
        double z = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            double e = std::exp(out.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (int j = 0; j < out.cols; ++j) out.at(i, j) /= z;
    }
    int ai = a.idx;
    return make_op(t, std::move(out), [ai](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& y = c.v(c.out);
        Matrix& ga = c.g(ai);
        for (int i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols; ++j) dot += og.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols; ++j)
                ga.at(i, j) += y.at(i, j) * (og.at(i, j) - dot);
        }
    });
}

Value masked_softmax(Value scores, const BoolMask& mask) {
    Tape& t = *scores.tape;
    const Matrix& sv = scores.val();
    if (sv.rows != 1 && sv.cols != 1)
        throw DimensionError("masked_softmax expects a vector, got " + sv.shape_str());
    int n = sv.size();
    if (mask.size() != n)
        throw DimensionError("masked_softmax: mask length " + std::to_string(mask.size()) +
                             " vs scores length " + std::to_string(n));
    if (mask.count_allowed() == 0)
        throw PreconditionError("masked_softmax with all positions masked");
    if (!sv.all_finite()) throw ValidationError("masked_softmax: non-finite scores");

    double mx = -1e300;
    for (int i = 0; i < n; ++i)
        if (mask.at(i)) mx = std::max(mx, sv.data[static_cast<size_t>(i)]);
    Matrix out(sv.rows, sv.cols);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!mask.at(i)) continue;
        double e = std::exp(sv.data[static_cast<size_t>(i)] - mx);
        out.data[static_cast<size_t>(i)] = e;
        z += e;
    }
    for (int i = 0; i < n; ++i)
        if (mask.at(i)) out.data[static_cast<size_t>(i)] /= z;

    int si = scores.idx;
    BoolMask mask_copy = mask;
    return make_op(t, std::move(out), [si, mask_copy, n](const OpCtx& c) {
        const Matrix& og = c.og();
        const Matrix& y = c.v(c.out);
        Matrix& gs = c.g(si);
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
            if (mask_copy.at(i)) dot += og.data[static_cast<size_t>(i)] * y.data[static_cast<size_t>(i)];
        for (int i = 0; i < n; ++i) {
            if (!mask_copy.at(i)) continue;  // masked scores get exactly zero gradient
            gs.data[static_cast<size_t>(i)] +=
                y.data[static_cast<size_t>(i)] * (og.data[static_cast<size_t>(i)] - dot);
        }
    });
}

Value bce(Value pred, double target, double eps) {
    Tape& t = *pred.tape;
    const Matrix& pv = pred.val();
    if (pv.size() != 1) throw DimensionError("bce expects a 1x1 prediction");
    if (!(target >= 0.0 && target <= 1.0))
        throw DomainError("bce target outside [0, 1]");
    double p = std::clamp(pv.data[0], eps, 1.0 - eps);
    double loss = -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
    int pi = pred.idx;
    return make_op(t, Matrix::from({{loss}}), [pi, target, eps](const OpCtx& c) {
        double praw = c.v(pi).data[0];
        if (praw <= eps || praw >= 1.0 - eps) return;  // clamped: saturated gradient
        double g = c.og().data[0];
        c.g(pi).data[0] += g * (praw - target) / (praw * (1.0 - praw));
    });
}

Value dropout(Value a, double rate, Rng& rng, bool training) {
    if (!training || rate == 0.0) return a;
    if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout rate outside [0, 1)");
    Tape& t = *a.tape;
    const Matrix& av = a.val();
    double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(static_cast<size_t>(av.size()));
    for (auto& m : mask) m = (rng.uniform01() >= rate) ? keep_scale : 0.0;
    Matrix out = av;
    for (int i = 0; i < out.size(); ++i) out.data[static_cast<size_t>(i)] *= mask[static_cast<size_t>(i)];
    int ai = a.idx;
    return make_op(t, std::move(out), [ai, mask](const OpCtx& c) {
        const Matrix& og = c.og();
        Matrix& ga = c.g(ai);
        for (int i = 0; i < og.size(); ++i)
            ga.data[static_cast<size_t>(i)] += og.data[static_cast<size_t>(i)] * mask[static_cast<size_t>(i)];
    });
}

LstmState lstm_step(Value input, LstmState state, Value wx, Value wh, Value bias) {
    const Matrix& iv = input.val();
    const Matrix& wxv = wx.val();
    const Matrix& whv = wh.val();
    if (iv.rows != 1) throw DimensionError("lstm_step expects a 1xI input row");
    if (iv.cols != wxv.rows)
        throw DimensionError("lstm_step: input width " + std::to_string(iv.cols) +
                             " vs wx rows " + std::to_string(wxv.rows));
    int hidden = whv.rows;
    if (state.h.val().cols != hidden || state.c.val().cols != hidden)
        throw DimensionError("lstm_step: state width mismatch");
    if (wxv.cols != 4 * hidden || whv.cols != 4 * hidden || bias.val().cols != 4 * hidden)
        throw DimensionError("lstm_step: gate block width must be 4*hidden");

    Value z = add_rowvec(add(matmul(input, wx), matmul(state.h, wh)), bias);
    Value gi = sigmoid(slice_cols(z, 0, hidden));
    Value gf = sigmoid(slice_cols(z, hidden, hidden));
    Value go = sigmoid(slice_cols(z, 2 * hidden, hidden));
    Value gg = tanh(slice_cols(z, 3 * hidden, hidden));
    Value c_next = add(mul(gf, state.c), mul(gi, gg));
    Value h_next = mul(go, tanh(c_next));
    return LstmState{h_next, c_next};
}

GradCheckResult grad_check(
    const std::function<Value(Tape&, const std::vector<Value>&)>& f,
    const std::vector<Matrix>& params, double eps) {
    // Analytic pass.
    std::vector<Matrix> grads;
    {
        Tape tape;
        std::vector<Value> lifted;
        lifted.reserve(params.size());
        for (const auto& p : params) lifted.push_back(tape.input(p));
        Value loss = f(tape, lifted);
        if (!std::isfinite(loss.scalar()))
            throw ValidationError("grad_check: non-finite loss");
        tape.backward(loss);
        for (const auto& v : lifted) grads.push_back(tape.grad(v));
    }

    auto eval = [&](const std::vector<Matrix>& p) {
        Tape tape;
        std::vector<Value> lifted;
        lifted.reserve(p.size());
        for (const auto& m : p) lifted.push_back(tape.input(m));
        double out = f(tape, lifted).scalar();
        if (!std::isfinite(out)) throw ValidationError("grad_check: non-finite loss");
        return out;
    };

    GradCheckResult res;
    std::vector<Matrix> work = params;
    for (size_t k = 0; k < params.size(); ++k) {
        for (int i = 0; i < params[k].size(); ++i) {
            double orig = work[k].data[static_cast<size_t>(i)];
            work[k].data[static_cast<size_t>(i)] = orig + eps;
            double fp = eval(work);
            work[k].data[static_cast<size_t>(i)] = orig - eps;
            double fm = eval(work);
            work[k].data[static_cast<size_t>(i)] = orig;
            double cd = (fp - fm) / (2.0 * eps);
            double an = grads[k].data[static_cast<size_t>(i)];
            double denom = std::max({std::fabs(an), std::fabs(cd), 1e-8});
            double rel = std::fabs(an - cd) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.param_index = static_cast<int>(k);
                res.entry_index = i;
                res.analytic = an;
                res.numeric = cd;
            }
        }
    }
    return res;
}

}  // namespace srcrec
