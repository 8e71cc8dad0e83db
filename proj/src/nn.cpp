#include "murreid/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace murreid::nn {

void init_uniform(Tensor2& t, size_t fan_in, SplitMix64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<size_t>(fan_in, 1)));
    for (double& x : t.v) x = rng.uniform(-bound, bound);
}

namespace {

void check_shapes(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape mismatch in ") + what);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y (len O) = W (O x I) * x (len I), accumulating
void matvec_acc(const Tensor2& W, const double* x, double* y) {
    for (size_t o = 0; o < W.rows; ++o) {
        const double* w = W.row(o);
        double acc = 0.0;
        for (size_t i = 0; i < W.cols; ++i) acc += w[i] * x[i];
        y[o] += acc;
    }
}

// y (len I) += W^T (I x O view of W: O x I) * d (len O)
void matvec_t_acc(const Tensor2& W, const double* d, double* y) {
    for (size_t o = 0; o < W.rows; ++o) {
        const double* w = W.row(o);
        const double dv = d[o];
        for (size_t i = 0; i < W.cols; ++i) y[i] += dv * w[i];
    }
}

// W_grad (O x I) += d (len O) outer x (len I)
void outer_acc(Tensor2& W_grad, const double* d, const double* x) {
    for (size_t o = 0; o < W_grad.rows; ++o) {
        double* g = W_grad.row(o);
        const double dv = d[o];
        for (size_t i = 0; i < W_grad.cols; ++i) g[i] += dv * x[i];
    }
}

} // namespace

Tensor2 dense_forward(const Tensor2& x, const Tensor2& W, const Tensor2& b) {
    check_shapes(x.cols == W.cols && b.rows == 1 && b.cols == W.rows, "dense_forward");
    Tensor2 y(x.rows, W.rows);
    for (size_t r = 0; r < x.rows; ++r) {
        double* out = y.row(r);
        for (size_t o = 0; o < W.rows; ++o) out[o] = b.at(0, o);
        matvec_acc(W, x.row(r), out);
    }
    return y;
}

Tensor2 dense_backward(const Tensor2& x, const Tensor2& dy, Param& W, Param& b) {
    check_shapes(dy.rows == x.rows && dy.cols == W.value.rows && x.cols == W.value.cols,
                 "dense_backward");
    Tensor2 dx(x.rows, x.cols);
    for (size_t r = 0; r < x.rows; ++r) {
        const double* d = dy.row(r);
        outer_acc(W.grad, d, x.row(r));
        for (size_t o = 0; o < W.value.rows; ++o) b.grad.at(0, o) += d[o];
        matvec_t_acc(W.value, d, dx.row(r));
    }
    return dx;
}

void LstmCellParams::init(size_t input_dim, size_t hidden_dim, const std::string& prefix,
                          SplitMix64& rng) {
    auto mk = [&](Param& p, const char* tag, size_t r, size_t c, size_t fan_in) {
        p = Param(prefix + "." + tag, r, c);
        init_uniform(p.value, fan_in, rng);
    };
    mk(W_i, "W_i", hidden_dim, input_dim, input_dim);
    mk(W_f, "W_f", hidden_dim, input_dim, input_dim);
    mk(W_o, "W_o", hidden_dim, input_dim, input_dim);
    mk(W_g, "W_g", hidden_dim, input_dim, input_dim);
    mk(U_i, "U_i", hidden_dim, hidden_dim, hidden_dim);
    mk(U_f, "U_f", hidden_dim, hidden_dim, hidden_dim);
    mk(U_o, "U_o", hidden_dim, hidden_dim, hidden_dim);
    mk(U_g, "U_g", hidden_dim, hidden_dim, hidden_dim);
    b_i = Param(prefix + ".b_i", 1, hidden_dim);
    b_f = Param(prefix + ".b_f", 1, hidden_dim);
    b_o = Param(prefix + ".b_o", 1, hidden_dim);
    b_g = Param(prefix + ".b_g", 1, hidden_dim);
    std::fill(b_f.value.v.begin(), b_f.value.v.end(), 1.0);  // forget-gate bias 1
}

void LstmCellParams::collect(std::vector<Param*>& out) {
    for (Param* p : {&W_i, &W_f, &W_o, &W_g, &U_i, &U_f, &U_o, &U_g, &b_i, &b_f, &b_o, &b_g})
        out.push_back(p);
}

void lstm_forward(const Tensor2& seq, size_t len, const LstmCellParams& p,
                  Tensor2& out, size_t col_off, LstmCache& cache) {
    const size_t H = p.hidden_dim();
    check_shapes(seq.cols == p.input_dim() && len <= seq.rows && out.rows >= len &&
                     out.cols >= col_off + H,
                 "lstm_forward");
    cache.len = len;
    for (Tensor2* t : {&cache.i, &cache.f, &cache.o, &cache.g, &cache.c, &cache.tanh_c, &cache.h})
        *t = Tensor2(len, H);

    std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
    std::vector<double> a_i(H), a_f(H), a_o(H), a_g(H);
    for (size_t t = 0; t < len; ++t) {
        const double* x = seq.row(t);
        for (size_t j = 0; j < H; ++j) {
            a_i[j] = p.b_i.value.at(0, j);
            a_f[j] = p.b_f.value.at(0, j);
            a_o[j] = p.b_o.value.at(0, j);
            a_g[j] = p.b_g.value.at(0, j);
        }
        matvec_acc(p.W_i.value, x, a_i.data());
        matvec_acc(p.W_f.value, x, a_f.data());
        matvec_acc(p.W_o.value, x, a_o.data());
        matvec_acc(p.W_g.value, x, a_g.data());
        matvec_acc(p.U_i.value, h_prev.data(), a_i.data());
        matvec_acc(p.U_f.value, h_prev.data(), a_f.data());
        matvec_acc(p.U_o.value, h_prev.data(), a_o.data());
        matvec_acc(p.U_g.value, h_prev.data(), a_g.data());
        for (size_t j = 0; j < H; ++j) {
            const double i_g = sigmoid(a_i[j]);
            const double f_g = sigmoid(a_f[j]);
            const double o_g = sigmoid(a_o[j]);
            const double g_c = std::tanh(a_g[j]);
            const double c_t = f_g * c_prev[j] + i_g * g_c;
            const double tc = std::tanh(c_t);
            const double h_t = o_g * tc;
            cache.i.at(t, j) = i_g;
            cache.f.at(t, j) = f_g;
            cache.o.at(t, j) = o_g;
            cache.g.at(t, j) = g_c;
            cache.c.at(t, j) = c_t;
            cache.tanh_c.at(t, j) = tc;
            cache.h.at(t, j) = h_t;
            out.at(t, col_off + j) = h_t;
            h_prev[j] = h_t;
            c_prev[j] = c_t;
        }
    }
}

void lstm_backward(const Tensor2& seq, size_t len, LstmCellParams& p,
                   const LstmCache& cache, const Tensor2& d_out, size_t col_off,
                   Tensor2& d_seq) {
    const size_t H = p.hidden_dim();
    check_shapes(cache.len == len && d_seq.rows == seq.rows && d_seq.cols == seq.cols,
                 "lstm_backward");

    std::vector<double> dh(H, 0.0), dc(H, 0.0);
    std::vector<double> da_i(H), da_f(H), da_o(H), da_g(H);
    for (size_t ti = len; ti-- > 0;) {
        for (size_t j = 0; j < H; ++j) dh[j] += d_out.at(ti, col_off + j);

        for (size_t j = 0; j < H; ++j) {
            const double o_g = cache.o.at(ti, j);
            const double tc = cache.tanh_c.at(ti, j);
            const double i_g = cache.i.at(ti, j);
            const double f_g = cache.f.at(ti, j);
            const double g_c = cache.g.at(ti, j);
            const double c_prev = ti > 0 ? cache.c.at(ti - 1, j) : 0.0;

            da_o[j] = dh[j] * tc * o_g * (1.0 - o_g);
            dc[j] += dh[j] * o_g * (1.0 - tc * tc);
            da_f[j] = dc[j] * c_prev * f_g * (1.0 - f_g);
            da_i[j] = dc[j] * g_c * i_g * (1.0 - i_g);
            da_g[j] = dc[j] * i_g * (1.0 - g_c * g_c);
            dc[j] *= f_g;  // becomes dc_{t-1}
        }

        const double* x = seq.row(ti);
        outer_acc(p.W_i.grad, da_i.data(), x);
        outer_acc(p.W_f.grad, da_f.data(), x);
        outer_acc(p.W_o.grad, da_o.data(), x);
        outer_acc(p.W_g.grad, da_g.data(), x);
        if (ti > 0) {
            const double* h_prev = cache.h.row(ti - 1);
            outer_acc(p.U_i.grad, da_i.data(), h_prev);
            outer_acc(p.U_f.grad, da_f.data(), h_prev);
            outer_acc(p.U_o.grad, da_o.data(), h_prev);
            outer_acc(p.U_g.grad, da_g.data(), h_prev);
        }
        for (size_t j = 0; j < H; ++j) {
            p.b_i.grad.at(0, j) += da_i[j];
            p.b_f.grad.at(0, j) += da_f[j];
            p.b_o.grad.at(0, j) += da_o[j];
            p.b_g.grad.at(0, j) += da_g[j];
        }

        double* dx = d_seq.row(ti);
        matvec_t_acc(p.W_i.value, da_i.data(), dx);
        matvec_t_acc(p.W_f.value, da_f.data(), dx);
        matvec_t_acc(p.W_o.value, da_o.data(), dx);
        matvec_t_acc(p.W_g.value, da_g.data(), dx);

        std::fill(dh.begin(), dh.end(), 0.0);
        matvec_t_acc(p.U_i.value, da_i.data(), dh.data());
        matvec_t_acc(p.U_f.value, da_f.data(), dh.data());
        matvec_t_acc(p.U_o.value, da_o.data(), dh.data());
        matvec_t_acc(p.U_g.value, da_g.data(), dh.data());
    }
}

void BiLstmParams::init(size_t input_dim, size_t hidden_dim, const std::string& prefix,
                        SplitMix64& rng) {
    fwd.init(input_dim, hidden_dim, prefix + ".fwd", rng);
    bwd.init(input_dim, hidden_dim, prefix + ".bwd", rng);
}

void BiLstmParams::collect(std::vector<Param*>& out) {
    fwd.collect(out);
    bwd.collect(out);
}

Tensor2 bilstm_forward(const Tensor2& seq, size_t len, const BiLstmParams& p, BiLstmCache& cache) {
    if (len == 0 || len > seq.rows)
        throw std::invalid_argument("bilstm_forward: need 1 <= len <= rows");
    const size_t H = p.hidden_dim();
    Tensor2 out(seq.rows, 2 * H);  // padded rows stay zero
    lstm_forward(seq, len, p.fwd, out, 0, cache.fwd);

    cache.rev_in = Tensor2(len, seq.cols);
    for (size_t t = 0; t < len; ++t)
        for (size_t c = 0; c < seq.cols; ++c) cache.rev_in.at(t, c) = seq.at(len - 1 - t, c);

    Tensor2 rev_out(len, H);
    lstm_forward(cache.rev_in, len, p.bwd, rev_out, 0, cache.bwd);
    for (size_t t = 0; t < len; ++t)
        for (size_t j = 0; j < H; ++j) out.at(len - 1 - t, H + j) = rev_out.at(t, j);
    return out;
}

Tensor2 bilstm_backward(const Tensor2& seq, size_t len, BiLstmParams& p,
                        const BiLstmCache& cache, const Tensor2& d_out) {
    const size_t H = p.hidden_dim();
    check_shapes(d_out.rows == seq.rows && d_out.cols == 2 * H, "bilstm_backward");

    Tensor2 d_seq(seq.rows, seq.cols);
    lstm_backward(seq, len, p.fwd, cache.fwd, d_out, 0, d_seq);

    Tensor2 d_rev_out(len, H);
    for (size_t t = 0; t < len; ++t)
        for (size_t j = 0; j < H; ++j) d_rev_out.at(t, j) = d_out.at(len - 1 - t, H + j);
    Tensor2 d_rev_in(len, seq.cols);
    lstm_backward(cache.rev_in, len, p.bwd, cache.bwd, d_rev_out, 0, d_rev_in);
    for (size_t t = 0; t < len; ++t)
        for (size_t c = 0; c < seq.cols; ++c) d_seq.at(len - 1 - t, c) += d_rev_in.at(t, c);
    return d_seq;
}

void AttentionParams::init(size_t dim, const std::string& prefix, SplitMix64& rng) {
    W_a = Param(prefix + ".W_a", dim, dim);
    query = Param(prefix + ".query", 1, dim);
    init_uniform(W_a.value, dim, rng);
    init_uniform(query.value, dim, rng);
}

void AttentionParams::collect(std::vector<Param*>& out) {
    out.push_back(&W_a);
    out.push_back(&query);
}

std::vector<double> attention_pool(const Tensor2& states, size_t len,
                                   const AttentionParams& p, AttentionCache& cache) {
    const size_t D = states.cols;
    check_shapes(p.W_a.value.rows == D && p.W_a.value.cols == D && p.query.value.cols == D,
                 "attention_pool");
    if (len == 0 || len > states.rows)
        throw std::invalid_argument("attention_pool: all steps masked (len 0) or len > rows");

    // u = W_a^T query, so score_t = u . state_t
    cache.u.assign(D, 0.0);
    matvec_t_acc(p.W_a.value, p.query.value.row(0), cache.u.data());

    std::vector<double> scores(len);
    double max_s = -1e300;
    for (size_t t = 0; t < len; ++t) {
        double s = 0.0;
        for (size_t d = 0; d < D; ++d) s += cache.u[d] * states.at(t, d);
        scores[t] = s;
        max_s = std::max(max_s, s);
    }
    cache.weights.assign(len, 0.0);
    double z = 0.0;
    for (size_t t = 0; t < len; ++t) {
        cache.weights[t] = std::exp(scores[t] - max_s);
        z += cache.weights[t];
    }
    std::vector<double> context(D, 0.0);
    for (size_t t = 0; t < len; ++t) {
        cache.weights[t] /= z;
        for (size_t d = 0; d < D; ++d) context[d] += cache.weights[t] * states.at(t, d);
    }
    return context;
}

void attention_pool_backward(const Tensor2& states, size_t len, AttentionParams& p,
                             const AttentionCache& cache, const std::vector<double>& d_context,
                             Tensor2& d_states) {
    const size_t D = states.cols;
    check_shapes(d_context.size() == D && d_states.rows == states.rows && d_states.cols == D,
                 "attention_pool_backward");

    // context = sum_t w_t s_t
    std::vector<double> dw(len);
    for (size_t t = 0; t < len; ++t) {
        double acc = 0.0;
        for (size_t d = 0; d < D; ++d) {
            acc += d_context[d] * states.at(t, d);
            d_states.at(t, d) += cache.weights[t] * d_context[d];
        }
        dw[t] = acc;
    }
    // softmax jacobian
    double mix = 0.0;
    for (size_t t = 0; t < len; ++t) mix += cache.weights[t] * dw[t];
    std::vector<double> ds(len);
    for (size_t t = 0; t < len; ++t) ds[t] = cache.weights[t] * (dw[t] - mix);

    // score_t = query^T W_a s_t
    const double* q = p.query.value.row(0);
    for (size_t t = 0; t < len; ++t) {
        const double* s = states.row(t);
        // dquery += ds_t * (W_a s_t); dW_a += ds_t * q s_t^T; ds_t flows via u
        for (size_t r = 0; r < D; ++r) {
            const double* w = p.W_a.value.row(r);
            double ws = 0.0;
            for (size_t c = 0; c < D; ++c) ws += w[c] * s[c];
            p.query.grad.at(0, r) += ds[t] * ws;
            double* wg = p.W_a.grad.row(r);
            const double dq = ds[t] * q[r];
            for (size_t c = 0; c < D; ++c) wg[c] += dq * s[c];
        }
        for (size_t d = 0; d < D; ++d) d_states.at(t, d) += ds[t] * cache.u[d];
    }
}

std::vector<double> global_avg_pool(const Tensor2& states, size_t len) {
    if (len == 0 || len > states.rows)
        throw std::invalid_argument("global_avg_pool: valid length must be in [1, rows]");
    std::vector<double> out(states.cols, 0.0);
    for (size_t t = 0; t < len; ++t)
        for (size_t d = 0; d < states.cols; ++d) out[d] += states.at(t, d);
    for (double& x : out) x /= static_cast<double>(len);
    return out;
}

void global_avg_pool_backward(const std::vector<double>& d_out, size_t len, Tensor2& d_states) {
    const double inv = 1.0 / static_cast<double>(len);
    for (size_t t = 0; t < len; ++t)
        for (size_t d = 0; d < d_states.cols; ++d) d_states.at(t, d) += d_out[d] * inv;
}

namespace {

// [floor(k*T/target), ceil((k+1)*T/target))
std::pair<size_t, size_t> pool_segment(size_t k, size_t T, size_t target) {
    size_t lo = (k * T) / target;
    size_t hi = ((k + 1) * T + target - 1) / target;
    return {lo, hi};
}

} // namespace

Tensor2 adaptive_avg_pool(const Tensor2& states, size_t target) {
    if (states.rows == 0 || target == 0)
        throw std::invalid_argument("adaptive_avg_pool: need T >= 1 and target >= 1");
    Tensor2 out(target, states.cols);
    for (size_t k = 0; k < target; ++k) {
        auto [lo, hi] = pool_segment(k, states.rows, target);
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (size_t t = lo; t < hi; ++t)
            for (size_t d = 0; d < states.cols; ++d) out.at(k, d) += states.at(t, d) * inv;
    }
    return out;
}

void adaptive_avg_pool_backward(const Tensor2& d_out, size_t T, Tensor2& d_states) {
    check_shapes(d_states.rows == T && d_states.cols == d_out.cols, "adaptive_avg_pool_backward");
    for (size_t k = 0; k < d_out.rows; ++k) {
        auto [lo, hi] = pool_segment(k, T, d_out.rows);
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (size_t t = lo; t < hi; ++t)
            for (size_t d = 0; d < d_out.cols; ++d) d_states.at(t, d) += d_out.at(k, d) * inv;
    }
}

std::vector<double> dropout_mask(size_t n, double p, uint64_t seed) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: need 0 <= p < 1");
    std::vector<double> mask(n, 1.0);
    if (p == 0.0) return mask;
    SplitMix64 rng(seed);
    const double scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < n; ++i) mask[i] = rng.uniform() < p ? 0.0 : scale;
    return mask;
}

Tensor2 dropout(const Tensor2& x, double p, DropoutMode mode, uint64_t seed) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: need 0 <= p < 1");
    if (mode == DropoutMode::Eval || p == 0.0) return x;
    Tensor2 y = x;
    std::vector<double> mask = dropout_mask(x.size(), p, seed);
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] *= mask[i];
    return y;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double max_l = -1e300;
    for (double l : logits) max_l = std::max(max_l, l);
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - max_l);
        z += out[k];
    }
    for (double& x : out) x /= z;
    return out;
}

XentResult softmax_xent(const Tensor2& logits, const std::vector<int>& labels) {
    if (logits.rows == 0) throw std::invalid_argument("softmax_xent: empty batch");
    check_shapes(labels.size() == logits.rows, "softmax_xent");
    const size_t B = logits.rows, K = logits.cols;
    XentResult res;
    res.d_logits = Tensor2(B, K);
    for (size_t r = 0; r < B; ++r) {
        const int label = labels[r];
        if (label < 0 || static_cast<size_t>(label) >= K)
            throw std::invalid_argument("softmax_xent: label out of range");
        const double* l = logits.row(r);
        double max_l = -1e300;
        for (size_t k = 0; k < K; ++k) max_l = std::max(max_l, l[k]);
        double z = 0.0;
        for (size_t k = 0; k < K; ++k) z += std::exp(l[k] - max_l);
        res.loss += std::log(z) - (l[static_cast<size_t>(label)] - max_l);
        for (size_t k = 0; k < K; ++k) {
            double p = std::exp(l[k] - max_l) / z;
            res.d_logits.at(r, k) =
                (p - (static_cast<size_t>(label) == k ? 1.0 : 0.0)) / static_cast<double>(B);
        }
    }
    res.loss /= static_cast<double>(B);
    return res;
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(std::string_view s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer: " + std::string(s));
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (max_steps < 1) throw std::invalid_argument("TrainConfig: max_steps must be >= 1");
}

void OptimizerState::reset(std::span<Param* const> params) {
    m.clear();
    v.clear();
    step = 0;
    for (const Param* p : params) {
        m.emplace_back(p->value.rows, p->value.cols);
        v.emplace_back(p->value.rows, p->value.cols);
    }
}

void optimizer_step(std::span<Param* const> params, const TrainConfig& cfg, OptimizerState& state) {
    for (const Param* p : params)
        for (double g : p->grad.v)
            if (!std::isfinite(g))
                throw std::runtime_error("non-finite gradient in parameter '" + p->name + "'");

    if (cfg.optimizer == OptimizerKind::Sgd) {
        state.step++;
        for (Param* p : params)
            for (size_t i = 0; i < p->value.v.size(); ++i)
                p->value.v[i] -= cfg.learning_rate * p->grad.v[i];
        return;
    }

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (state.m.size() != params.size()) state.reset(params);
    state.step++;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param* p = params[pi];
        Tensor2& m = state.m[pi];
        Tensor2& v = state.v[pi];
        for (size_t i = 0; i < p->value.v.size(); ++i) {
            const double g = p->grad.v[i];
            m.v[i] = beta1 * m.v[i] + (1.0 - beta1) * g;
            v.v[i] = beta2 * v.v[i] + (1.0 - beta2) * g * g;
            const double m_hat = m.v[i] / bc1;
            const double v_hat = v.v[i] / bc2;
            p->value.v[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

double clip_global_norm(std::span<Param* const> params, double max_norm) {
    double sq = 0.0;
    for (const Param* p : params)
        for (double g : p->grad.v) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (Param* p : params)
            for (double& g : p->grad.v) g *= scale;
    }
    return norm;
}

void zero_grads(std::span<Param* const> params) {
    for (Param* p : params) p->grad.zero();
}

double grad_check(const std::function<double(bool)>& fb, std::span<Param* const> params) {
    zero_grads(params);
    fb(true);

    std::vector<Tensor2> analytic;
    analytic.reserve(params.size());
    for (const Param* p : params) analytic.push_back(p->grad);

    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param* p = params[pi];
        for (size_t i = 0; i < p->value.v.size(); ++i) {
            const double theta = p->value.v[i];
            const double h = 1e-5 * std::max(1.0, std::abs(theta));
            p->value.v[i] = theta + h;
            const double loss_plus = fb(false);
            p->value.v[i] = theta - h;
            const double loss_minus = fb(false);
            p->value.v[i] = theta;
            const double numeric = (loss_plus - loss_minus) / (2.0 * h);
            const double a = analytic[pi].v[i];
            const double rel = std::abs(a - numeric) / std::max({1e-6, std::abs(a), std::abs(numeric)});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace murreid::nn
