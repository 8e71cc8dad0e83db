#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "murreid/rng.hpp"

namespace murreid::nn {

// Row-major dense matrix of doubles. Double precision keeps the
// finite-difference gradient checks meaningful.
struct Tensor2 {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> v;

    Tensor2() = default;
    Tensor2(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& at(size_t r, size_t c) { return v[r * cols + c]; }
    double at(size_t r, size_t c) const { return v[r * cols + c]; }
    double* row(size_t r) { return v.data() + r * cols; }
    const double* row(size_t r) const { return v.data() + r * cols; }
    size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// Named trainable tensor paired with its gradient accumulator.
struct Param {
    std::string name;
    Tensor2 value;
    Tensor2 grad;

    Param() = default;
    Param(std::string n, size_t r, size_t c) : name(std::move(n)), value(r, c), grad(r, c) {}
};

// U(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
void init_uniform(Tensor2& t, size_t fan_in, SplitMix64& rng);

// ---- dense ----------------------------------------------------------------

// y = x W^T + b with x: B x I, W: O x I, b: 1 x O.
Tensor2 dense_forward(const Tensor2& x, const Tensor2& W, const Tensor2& b);

// Accumulates dW/db into the param grads and returns dx.
Tensor2 dense_backward(const Tensor2& x, const Tensor2& dy, Param& W, Param& b);

// ---- lstm ------------------------------------------------------------------

// One direction. Gate weights W_* are H x I, recurrent U_* are H x H,
// biases 1 x H. Forget-gate bias starts at 1.
struct LstmCellParams {
    Param W_i, W_f, W_o, W_g;
    Param U_i, U_f, U_o, U_g;
    Param b_i, b_f, b_o, b_g;

    void init(size_t input_dim, size_t hidden_dim, const std::string& prefix, SplitMix64& rng);
    size_t input_dim() const { return W_i.value.cols; }
    size_t hidden_dim() const { return W_i.value.rows; }
    void collect(std::vector<Param*>& out);
};

// Per-step activations kept for backpropagation through time.
struct LstmCache {
    size_t len = 0;
    Tensor2 i, f, o, g, c, tanh_c, h;  // len x H each
};

// Runs rows [0, len) of seq; h and c start at zero. Writes states into
// out rows [0, len) at column offset col_off; rows >= len are left as-is.
void lstm_forward(const Tensor2& seq, size_t len, const LstmCellParams& p,
                  Tensor2& out, size_t col_off, LstmCache& cache);

// d_out reads the same column window; accumulates param grads, adds to d_seq.
void lstm_backward(const Tensor2& seq, size_t len, LstmCellParams& p,
                   const LstmCache& cache, const Tensor2& d_out, size_t col_off,
                   Tensor2& d_seq);

struct BiLstmParams {
    LstmCellParams fwd, bwd;

    void init(size_t input_dim, size_t hidden_dim, const std::string& prefix, SplitMix64& rng);
    size_t hidden_dim() const { return fwd.hidden_dim(); }
    void collect(std::vector<Param*>& out);
};

struct BiLstmCache {
    LstmCache fwd, bwd;
    Tensor2 rev_in;  // reversed valid prefix fed to the backward cell
};

// Output is T x 2H: [h_fwd ; h_bwd] per step, zero rows beyond len.
// The backward cell processes the reversed valid prefix.
Tensor2 bilstm_forward(const Tensor2& seq, size_t len, const BiLstmParams& p, BiLstmCache& cache);

// Returns d_seq; accumulates parameter gradients.
Tensor2 bilstm_backward(const Tensor2& seq, size_t len, BiLstmParams& p,
                        const BiLstmCache& cache, const Tensor2& d_out);

// ---- attention -------------------------------------------------------------

// Luong general attention with a learned query:
// score_t = query^T W_a state_t over valid steps, context = sum softmax * state.
struct AttentionParams {
    Param W_a;    // D x D
    Param query;  // 1 x D

    void init(size_t dim, const std::string& prefix, SplitMix64& rng);
    void collect(std::vector<Param*>& out);
};

struct AttentionCache {
    std::vector<double> weights;  // softmax over valid steps
    std::vector<double> u;        // W_a^T query
};

std::vector<double> attention_pool(const Tensor2& states, size_t len,
                                   const AttentionParams& p, AttentionCache& cache);

void attention_pool_backward(const Tensor2& states, size_t len, AttentionParams& p,
                             const AttentionCache& cache, const std::vector<double>& d_context,
                             Tensor2& d_states);

// ---- pooling ---------------------------------------------------------------

// Elementwise mean over the first len rows; len must be >= 1.
std::vector<double> global_avg_pool(const Tensor2& states, size_t len);
void global_avg_pool_backward(const std::vector<double>& d_out, size_t len, Tensor2& d_states);

// Output row k = mean of input rows [floor(k*T/target), ceil((k+1)*T/target)).
// Identity when T == target; segments may overlap when T % target != 0.
Tensor2 adaptive_avg_pool(const Tensor2& states, size_t target);
void adaptive_avg_pool_backward(const Tensor2& d_out, size_t T, Tensor2& d_states);

// ---- dropout ---------------------------------------------------------------

enum class DropoutMode { Train, Eval };

// Inverted dropout: train mode zeroes each element with probability p and
// scales survivors by 1/(1-p); eval mode is the identity. Deterministic
// under seed.
Tensor2 dropout(const Tensor2& x, double p, DropoutMode mode, uint64_t seed);

// Train-mode mask (entries 0 or 1/(1-p)) for use in backward passes;
// identical to what dropout() applies for the same seed.
std::vector<double> dropout_mask(size_t n, double p, uint64_t seed);

// ---- loss ------------------------------------------------------------------

std::vector<double> softmax(const std::vector<double>& logits);

struct XentResult {
    double loss = 0.0;
    Tensor2 d_logits;  // (softmax - one_hot) / B
};

// Max-subtracted softmax cross-entropy averaged over the batch.
XentResult softmax_xent(const Tensor2& logits, const std::vector<int>& labels);

// ---- optimization ----------------------------------------------------------

enum class OptimizerKind { Sgd, Adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view s);

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 3;
    int batch_size = 16;
    uint64_t seed = 42;
    OptimizerKind optimizer = OptimizerKind::Adam;
    int64_t max_steps = 100000;
    double clip_norm = 5.0;

    void validate() const;
};

struct OptimizerState {
    std::vector<Tensor2> m, v;  // Adam moments, by param position
    int64_t step = 0;

    void reset(std::span<Param* const> params);
};

// SGD: p -= lr * g. Adam: beta = (0.9, 0.999), eps = 1e-8, bias-corrected.
// Throws on non-finite gradients, naming the parameter.
void optimizer_step(std::span<Param* const> params, const TrainConfig& cfg, OptimizerState& state);

// Scales all gradients so their global L2 norm is at most max_norm.
double clip_global_norm(std::span<Param* const> params, double max_norm);

void zero_grads(std::span<Param* const> params);

// ---- verification ----------------------------------------------------------

// fb(true) must run forward+backward (filling parameter grads) and return the
// loss; fb(false) is forward-only. Central differences with
// h = 1e-5 * max(1, |theta|). Returns the max relative error over all
// parameter elements.
double grad_check(const std::function<double(bool)>& fb, std::span<Param* const> params);

} // namespace murreid::nn
