#include "murreid/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace murreid {

using nn::Param;
using nn::Tensor2;

std::string to_string(ModelKind k) { return k == ModelKind::TextOnly ? "text" : "fusion"; }

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "text") return ModelKind::TextOnly;
    if (s == "fusion") return ModelKind::Fusion;
    throw std::invalid_argument("unknown model kind: " + std::string(s));
}

void TextOnlyModel::init(Vocabulary v, const ModelDims& d, size_t classes, uint64_t seed) {
    dims = d;
    vocab = std::move(v);
    n_classes = classes;
    SplitMix64 rng(derive_seed(seed, 0x7E57));
    const size_t E = d.embedding_dim, H = d.hidden_dim;
    embedding = Param("embedding", vocab.size(), E);
    nn::init_uniform(embedding.value, E, rng);
    lstm1.init(E, H, "lstm1", rng);
    lstm2.init(2 * H, H, "lstm2", rng);
    attention.init(2 * H, "attention", rng);
    head_W = Param("head.W", n_classes, 2 * H);
    head_b = Param("head.b", 1, n_classes);
    nn::init_uniform(head_W.value, 2 * H, rng);
}

std::vector<Param*> TextOnlyModel::params() {
    std::vector<Param*> out{&embedding};
    lstm1.collect(out);
    lstm2.collect(out);
    attention.collect(out);
    out.push_back(&head_W);
    out.push_back(&head_b);
    return out;
}

std::vector<const Param*> TextOnlyModel::params() const {
    auto mut = const_cast<TextOnlyModel*>(this)->params();
    return {mut.begin(), mut.end()};
}

void FusionModel::init(Vocabulary v, const ModelDims& d, const DspConfig& dsp_cfg,
                       size_t classes, uint64_t seed) {
    dims = d;
    vocab = std::move(v);
    dsp = dsp_cfg;
    n_classes = classes;
    SplitMix64 rng(derive_seed(seed, 0xF0510));
    const size_t E = d.embedding_dim, H = d.hidden_dim, P = d.audio_proj_dim;
    const size_t D = dsp.feature_dim();
    embedding = Param("embedding", vocab.size(), E);
    nn::init_uniform(embedding.value, E, rng);
    text_lstm.init(E, H, "text_lstm", rng);
    audio_proj_W = Param("audio_proj.W", P, D);
    audio_proj_b = Param("audio_proj.b", 1, P);
    nn::init_uniform(audio_proj_W.value, D, rng);
    audio_lstm.init(P, H, "audio_lstm", rng);
    head_W = Param("head.W", n_classes, fused_dim());
    head_b = Param("head.b", 1, n_classes);
    nn::init_uniform(head_W.value, fused_dim(), rng);
}

size_t FusionModel::fused_dim() const {
    return 2 * dims.hidden_dim + dims.adaptive_target * 2 * dims.hidden_dim;
}

std::vector<Param*> FusionModel::params() {
    std::vector<Param*> out{&embedding};
    text_lstm.collect(out);
    out.push_back(&audio_proj_W);
    out.push_back(&audio_proj_b);
    audio_lstm.collect(out);
    out.push_back(&head_W);
    out.push_back(&head_b);
    return out;
}

std::vector<const Param*> FusionModel::params() const {
    auto mut = const_cast<FusionModel*>(this)->params();
    return {mut.begin(), mut.end()};
}

nn::Tensor2 prepare_audio_features(const Waveform& w, const DspConfig& dsp,
                                   double offset, double scale) {
    Waveform at_rate = w.sample_rate_hz == dsp.target_rate_hz ? w : resample(w, dsp.target_rate_hz);
    FeatureSequence fs = extract_features(at_rate, dsp);
    Tensor2 out(fs.frames, fs.dim);
    for (size_t t = 0; t < fs.frames; ++t)
        for (size_t d = 0; d < fs.dim; ++d) out.at(t, d) = (fs.at(t, d) - offset) * scale;
    return out;
}

namespace {

// ---- forward/backward plumbing ---------------------------------------------

struct TextActivation {
    size_t len = 0;
    std::vector<int> ids;
    Tensor2 emb;
    nn::BiLstmCache c1, c2;
    Tensor2 h1, h2;
    nn::AttentionCache att;
    std::vector<double> ctx;
    Tensor2 ctx_row;
    Tensor2 logits;
};

// Embeds the first true_length tokens; an empty transcript becomes a single
// PAD step so pooling always has one valid row.
void embed_transcript(const Vocabulary& vocab, const Param& embedding, size_t fixed_len,
                      const std::string& transcript, size_t E,
                      std::vector<int>& ids, Tensor2& emb, size_t& len) {
    std::vector<std::string> tokens = tokenize(transcript, vocab.granularity());
    EncodedText enc = encode_fixed(tokens, vocab, fixed_len);
    len = std::max<size_t>(enc.true_length, 1);
    ids.assign(enc.ids.begin(), enc.ids.begin() + static_cast<long>(len));
    emb = Tensor2(len, E);
    for (size_t t = 0; t < len; ++t) {
        const double* row = embedding.value.row(static_cast<size_t>(ids[t]));
        std::copy(row, row + E, emb.row(t));
    }
}

void embed_backward(Param& embedding, const std::vector<int>& ids, const Tensor2& d_emb) {
    for (size_t t = 0; t < d_emb.rows; ++t) {
        double* g = embedding.grad.row(static_cast<size_t>(ids[t]));
        const double* d = d_emb.row(t);
        for (size_t e = 0; e < d_emb.cols; ++e) g[e] += d[e];
    }
}

void text_forward(const TextOnlyModel& m, const std::string& transcript, TextActivation& act) {
    embed_transcript(m.vocab, m.embedding, m.dims.text_fixed_len, transcript,
                     m.dims.embedding_dim, act.ids, act.emb, act.len);
    act.h1 = nn::bilstm_forward(act.emb, act.len, m.lstm1, act.c1);
    act.h2 = nn::bilstm_forward(act.h1, act.len, m.lstm2, act.c2);
    act.ctx = nn::attention_pool(act.h2, act.len, m.attention, act.att);
    act.ctx_row = Tensor2(1, act.ctx.size());
    std::copy(act.ctx.begin(), act.ctx.end(), act.ctx_row.row(0));
    act.logits = nn::dense_forward(act.ctx_row, m.head_W.value, m.head_b.value);
}

void text_backward(TextOnlyModel& m, const TextActivation& act, const Tensor2& d_logits) {
    Tensor2 d_ctx_row = nn::dense_backward(act.ctx_row, d_logits, m.head_W, m.head_b);
    std::vector<double> d_ctx(d_ctx_row.row(0), d_ctx_row.row(0) + d_ctx_row.cols);
    Tensor2 d_h2(act.h2.rows, act.h2.cols);
    nn::attention_pool_backward(act.h2, act.len, m.attention, act.att, d_ctx, d_h2);
    Tensor2 d_h1 = nn::bilstm_backward(act.h1, act.len, m.lstm2, act.c2, d_h2);
    Tensor2 d_emb = nn::bilstm_backward(act.emb, act.len, m.lstm1, act.c1, d_h1);
    embed_backward(m.embedding, act.ids, d_emb);
}

struct FusionActivation {
    // text branch
    size_t text_len = 0;
    std::vector<int> ids;
    Tensor2 emb;
    nn::BiLstmCache tc;
    Tensor2 th;
    std::vector<double> tvec;
    // audio branch
    const Tensor2* feats = nullptr;
    Tensor2 proj_pre, proj;
    nn::BiLstmCache ac;
    Tensor2 ah;
    Tensor2 pooled;
    // head
    Tensor2 fused;
    std::vector<double> mask;
    Tensor2 dropped;
    Tensor2 logits;
};

void fusion_forward(const FusionModel& m, const std::string& transcript, const Tensor2& feats,
                    bool training, uint64_t dropout_seed, FusionActivation& act) {
    const size_t H = m.dims.hidden_dim;
    embed_transcript(m.vocab, m.embedding, m.dims.text_fixed_len, transcript,
                     m.dims.embedding_dim, act.ids, act.emb, act.text_len);
    act.th = nn::bilstm_forward(act.emb, act.text_len, m.text_lstm, act.tc);
    act.tvec = nn::global_avg_pool(act.th, act.text_len);

    act.feats = &feats;
    act.proj_pre = nn::dense_forward(feats, m.audio_proj_W.value, m.audio_proj_b.value);
    act.proj = act.proj_pre;
    for (double& x : act.proj.v) x = std::tanh(x);
    act.ah = nn::bilstm_forward(act.proj, act.proj.rows, m.audio_lstm, act.ac);
    act.pooled = nn::adaptive_avg_pool(act.ah, m.dims.adaptive_target);

    act.fused = Tensor2(1, m.fused_dim());
    double* f = act.fused.row(0);
    std::copy(act.tvec.begin(), act.tvec.end(), f);
    std::copy(act.pooled.v.begin(), act.pooled.v.end(), f + 2 * H);

    if (training && m.dropout_p > 0.0) {
        act.mask = nn::dropout_mask(act.fused.size(), m.dropout_p, dropout_seed);
        act.dropped = act.fused;
        for (size_t i = 0; i < act.dropped.v.size(); ++i) act.dropped.v[i] *= act.mask[i];
    } else {
        act.mask.clear();
        act.dropped = act.fused;
    }
    act.logits = nn::dense_forward(act.dropped, m.head_W.value, m.head_b.value);
}

void fusion_backward(FusionModel& m, const FusionActivation& act, const Tensor2& d_logits) {
    const size_t H = m.dims.hidden_dim;
    Tensor2 d_dropped = nn::dense_backward(act.dropped, d_logits, m.head_W, m.head_b);
    if (!act.mask.empty())
        for (size_t i = 0; i < d_dropped.v.size(); ++i) d_dropped.v[i] *= act.mask[i];

    const double* df = d_dropped.row(0);
    std::vector<double> d_tvec(df, df + 2 * H);
    Tensor2 d_pooled(m.dims.adaptive_target, 2 * H);
    std::copy(df + 2 * H, df + m.fused_dim(), d_pooled.v.begin());

    // audio branch
    Tensor2 d_ah(act.ah.rows, act.ah.cols);
    nn::adaptive_avg_pool_backward(d_pooled, act.ah.rows, d_ah);
    Tensor2 d_proj = nn::bilstm_backward(act.proj, act.proj.rows, m.audio_lstm, act.ac, d_ah);
    for (size_t i = 0; i < d_proj.v.size(); ++i)
        d_proj.v[i] *= 1.0 - act.proj.v[i] * act.proj.v[i];  // through tanh
    nn::dense_backward(*act.feats, d_proj, m.audio_proj_W, m.audio_proj_b);

    // text branch
    Tensor2 d_th(act.th.rows, act.th.cols);
    nn::global_avg_pool_backward(d_tvec, act.text_len, d_th);
    Tensor2 d_emb = nn::bilstm_backward(act.emb, act.text_len, m.text_lstm, act.tc, d_th);
    embed_backward(m.embedding, act.ids, d_emb);
}

} // namespace

std::vector<double> text_logits(const TextOnlyModel& m, const std::string& transcript) {
    TextActivation act;
    text_forward(m, transcript, act);
    return {act.logits.row(0), act.logits.row(0) + act.logits.cols};
}

std::vector<double> fusion_logits(const FusionModel& m, const std::string& transcript,
                                  const nn::Tensor2& feats) {
    FusionActivation act;
    fusion_forward(m, transcript, feats, false, 0, act);
    return {act.logits.row(0), act.logits.row(0) + act.logits.cols};
}

double text_example_loss(TextOnlyModel& m, const std::string& transcript, int label,
                         bool backward, double grad_scale) {
    TextActivation act;
    text_forward(m, transcript, act);
    nn::XentResult xr = nn::softmax_xent(act.logits, {label});
    if (backward) {
        for (double& g : xr.d_logits.v) g *= grad_scale;
        text_backward(m, act, xr.d_logits);
    }
    return xr.loss;
}

double fusion_example_loss(FusionModel& m, const std::string& transcript,
                           const nn::Tensor2& feats, int label, bool backward,
                           double grad_scale, bool training, uint64_t dropout_seed) {
    FusionActivation act;
    fusion_forward(m, transcript, feats, training, dropout_seed, act);
    nn::XentResult xr = nn::softmax_xent(act.logits, {label});
    if (backward) {
        for (double& g : xr.d_logits.v) g *= grad_scale;
        fusion_backward(m, act, xr.d_logits);
    }
    return xr.loss;
}

namespace {

// ---- training loop -----------------------------------------------------------

void snap_to_float32(std::span<Param* const> params) {
    for (Param* p : params)
        for (double& v : p->value.v) v = static_cast<double>(static_cast<float>(v));
}

int argmax_lowest(const std::vector<double>& scores) {
    int best = 0;
    for (size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[static_cast<size_t>(best)]) best = static_cast<int>(k);
    return best;
}

void check_labels(const std::vector<Utterance>& utts, const LabelRegistry& registry) {
    for (const Utterance& u : utts)
        if (u.dialect.index < 0 || static_cast<size_t>(u.dialect.index) >= registry.size())
            throw std::invalid_argument("utterance '" + u.id + "': label outside registry");
}

Vocabulary vocab_from(const std::vector<Utterance>& train) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(train.size());
    for (const Utterance& u : train) docs.push_back(tokenize(u.transcript_dialectal, Granularity::Word));
    return Vocabulary::build(docs, 1, 50000, Granularity::Word);
}

// Mini-batch loop shared by both model kinds. fwd_bwd must return the example
// loss and accumulate gradients scaled by grad_scale; val_accuracy runs an
// eval-mode pass over the validation set.
TrainReport train_loop(size_t n_train, size_t n_val, const nn::TrainConfig& cfg,
                       std::span<Param* const> params,
                       const std::function<double(size_t, uint64_t, double)>& fwd_bwd,
                       const std::function<double()>& val_accuracy) {
    cfg.validate();
    TrainReport rep;
    rep.config = cfg;

    SplitMix64 order_rng(derive_seed(cfg.seed, 0x0DE8));
    nn::OptimizerState opt;
    opt.reset(params);

    std::vector<size_t> order(n_train);
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<Tensor2> best_weights;
    double best_acc = -1.0;
    int best_epoch = 0;
    int64_t steps = 0;
    bool capped = false;

    for (int epoch = 1; epoch <= cfg.epochs && !capped; ++epoch) {
        shuffle(order, order_rng);
        double loss_sum = 0.0;
        size_t seen = 0;
        const auto batch = static_cast<size_t>(cfg.batch_size);
        for (size_t pos = 0; pos < n_train; pos += batch) {
            if (steps >= cfg.max_steps) {
                capped = true;
                break;
            }
            const size_t bn = std::min(batch, n_train - pos);
            nn::zero_grads(params);
            const double scale = 1.0 / static_cast<double>(bn);
            for (size_t b = 0; b < bn; ++b) {
                const uint64_t dseed = derive_seed(cfg.seed, static_cast<uint64_t>(steps) + 1, b + 1);
                loss_sum += fwd_bwd(order[pos + b], dseed, scale);
                ++seen;
            }
            nn::clip_global_norm(params, cfg.clip_norm);
            nn::optimizer_step(params, cfg, opt);
            ++steps;
        }
        rep.train_loss.push_back(seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0);
        const double acc = n_val > 0 ? val_accuracy() : 0.0;
        rep.val_accuracy.push_back(acc);
        if (n_val > 0 && acc > best_acc) {
            best_acc = acc;
            best_epoch = epoch;
            best_weights.clear();
            for (const Param* p : params) best_weights.push_back(p->value);
        }
    }

    if (best_epoch > 0) {
        for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_weights[i];
        rep.selected_epoch = best_epoch;
    } else {
        rep.selected_epoch = static_cast<int>(rep.val_accuracy.size());
    }
    rep.steps = steps;
    snap_to_float32(params);
    return rep;
}

} // namespace

std::pair<TextOnlyModel, TrainReport> train_text_only(const std::vector<Utterance>& train,
                                                      const std::vector<Utterance>& val,
                                                      const nn::TrainConfig& cfg,
                                                      const ModelDims& dims,
                                                      const LabelRegistry& registry) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("train_text_only: empty training set");
    check_labels(train, registry);
    check_labels(val, registry);

    TextOnlyModel model;
    model.init(vocab_from(train), dims, registry.size(), cfg.seed);
    std::vector<Param*> params = model.params();

    auto fwd_bwd = [&](size_t idx, uint64_t, double scale) {
        return text_example_loss(model, train[idx].transcript_dialectal,
                                 train[idx].dialect.index, true, scale);
    };
    auto val_accuracy = [&]() {
        size_t correct = 0;
        for (const Utterance& u : val)
            if (argmax_lowest(text_logits(model, u.transcript_dialectal)) == u.dialect.index)
                ++correct;
        return static_cast<double>(correct) / static_cast<double>(val.size());
    };

    TrainReport rep = train_loop(train.size(), val.size(), cfg, params, fwd_bwd, val_accuracy);
    return {std::move(model), std::move(rep)};
}

std::pair<FusionModel, TrainReport> train_fusion(const std::vector<Utterance>& train,
                                                 const std::vector<Utterance>& val,
                                                 const nn::TrainConfig& cfg,
                                                 const ModelDims& dims,
                                                 const DspConfig& dsp,
                                                 const LabelRegistry& registry) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("train_fusion: empty training set");
    check_labels(train, registry);
    check_labels(val, registry);

    FusionModel model;
    model.init(vocab_from(train), dims, dsp, registry.size(), cfg.seed);
    std::vector<Param*> params = model.params();

    auto featurize = [&](const Utterance& u) {
        try {
            return prepare_audio_features(decode_wav(u.audio_path), model.dsp, model.feat_offset,
                                          model.feat_scale);
        } catch (const std::exception& e) {
            throw std::runtime_error("utterance '" + u.id + "': " + e.what());
        }
    };
    std::vector<Tensor2> train_feats, val_feats;
    train_feats.reserve(train.size());
    val_feats.reserve(val.size());
    for (const Utterance& u : train) train_feats.push_back(featurize(u));
    for (const Utterance& u : val) val_feats.push_back(featurize(u));

    auto fwd_bwd = [&](size_t idx, uint64_t dropout_seed, double scale) {
        return fusion_example_loss(model, train[idx].transcript_dialectal, train_feats[idx],
                                   train[idx].dialect.index, true, scale, true, dropout_seed);
    };
    auto val_accuracy = [&]() {
        size_t correct = 0;
        for (size_t i = 0; i < val.size(); ++i)
            if (argmax_lowest(fusion_logits(model, val[i].transcript_dialectal, val_feats[i])) ==
                val[i].dialect.index)
                ++correct;
        return static_cast<double>(correct) / static_cast<double>(val.size());
    };

    TrainReport rep = train_loop(train.size(), val.size(), cfg, params, fwd_bwd, val_accuracy);
    return {std::move(model), std::move(rep)};
}

ModelBundle bundle_from(TextOnlyModel model, const LabelRegistry& registry) {
    ModelBundle b;
    b.kind = ModelKind::TextOnly;
    b.registry = registry;
    b.text = std::move(model);
    auto params = b.text->params();
    snap_to_float32(params);
    return b;
}

ModelBundle bundle_from(FusionModel model, const LabelRegistry& registry) {
    ModelBundle b;
    b.kind = ModelKind::Fusion;
    b.registry = registry;
    b.fusion = std::move(model);
    auto params = b.fusion->params();
    snap_to_float32(params);
    return b;
}

Prediction predict(const ModelBundle& bundle, const std::string& transcript,
                   const std::optional<Waveform>& audio) {
    std::vector<double> logits;
    if (bundle.kind == ModelKind::Fusion) {
        if (!bundle.fusion) throw std::runtime_error("bundle has no fusion model");
        if (!audio) throw std::invalid_argument("audio required for a fusion bundle");
        const FusionModel& m = *bundle.fusion;
        Tensor2 feats = prepare_audio_features(*audio, m.dsp, m.feat_offset, m.feat_scale);
        FusionActivation act;
        fusion_forward(m, transcript, feats, false, 0, act);
        logits.assign(act.logits.row(0), act.logits.row(0) + act.logits.cols);
    } else {
        if (!bundle.text) throw std::runtime_error("bundle has no text model");
        TextActivation act;
        text_forward(*bundle.text, transcript, act);
        logits.assign(act.logits.row(0), act.logits.row(0) + act.logits.cols);
    }
    Prediction pred;
    pred.scores = nn::softmax(logits);
    pred.label = bundle.registry.at(argmax_lowest(pred.scores));
    return pred;
}

// ---- serialization -----------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json dims_to_json(const ModelDims& d) {
    return ordered_json{{"embedding_dim", d.embedding_dim},
                        {"hidden_dim", d.hidden_dim},
                        {"audio_proj_dim", d.audio_proj_dim},
                        {"adaptive_target", d.adaptive_target},
                        {"text_fixed_len", d.text_fixed_len}};
}

ModelDims dims_from_json(const ordered_json& j) {
    ModelDims d;
    d.embedding_dim = j.at("embedding_dim").get<size_t>();
    d.hidden_dim = j.at("hidden_dim").get<size_t>();
    d.audio_proj_dim = j.at("audio_proj_dim").get<size_t>();
    d.adaptive_target = j.at("adaptive_target").get<size_t>();
    d.text_fixed_len = j.at("text_fixed_len").get<size_t>();
    return d;
}

ordered_json dsp_to_json(const DspConfig& c) {
    return ordered_json{{"target_rate_hz", c.target_rate_hz},
                        {"frame_len_s", c.frame_len_s},
                        {"frame_shift_s", c.frame_shift_s},
                        {"fft_size", c.fft_size},
                        {"n_mels", c.n_mels},
                        {"n_mfcc", c.n_mfcc},
                        {"feature_kind", c.feature_kind == FeatureKind::Mfcc ? "mfcc" : "log-mel"}};
}

DspConfig dsp_from_json(const ordered_json& j) {
    DspConfig c;
    c.target_rate_hz = j.at("target_rate_hz").get<int>();
    c.frame_len_s = j.at("frame_len_s").get<double>();
    c.frame_shift_s = j.at("frame_shift_s").get<double>();
    c.fft_size = j.at("fft_size").get<int>();
    c.n_mels = j.at("n_mels").get<int>();
    c.n_mfcc = j.at("n_mfcc").get<int>();
    c.feature_kind =
        j.at("feature_kind").get<std::string>() == "mfcc" ? FeatureKind::Mfcc : FeatureKind::LogMel;
    return c;
}

} // namespace

void save_bundle(const ModelBundle& bundle, const std::string& path) {
    std::vector<const Param*> params = bundle.kind == ModelKind::Fusion
                                           ? bundle.fusion->params()
                                           : bundle.text->params();

    ordered_json header;
    header["kind"] = to_string(bundle.kind);
    ordered_json labels = ordered_json::array();
    for (const DialectLabel& l : bundle.registry.labels())
        labels.push_back(ordered_json{{"name", l.name}, {"code", l.code}});
    header["labels"] = std::move(labels);

    if (bundle.kind == ModelKind::TextOnly) {
        const TextOnlyModel& m = *bundle.text;
        header["dims"] = dims_to_json(m.dims);
        header["n_classes"] = m.n_classes;
        header["text"] = ordered_json{{"granularity", to_string(m.vocab.granularity())},
                                      {"vocab", m.vocab.tokens()}};
    } else {
        const FusionModel& m = *bundle.fusion;
        header["dims"] = dims_to_json(m.dims);
        header["n_classes"] = m.n_classes;
        header["text"] = ordered_json{{"granularity", to_string(m.vocab.granularity())},
                                      {"vocab", m.vocab.tokens()}};
        header["dsp"] = dsp_to_json(m.dsp);
        header["dropout_p"] = m.dropout_p;
        header["feat_offset"] = m.feat_offset;
        header["feat_scale"] = m.feat_scale;
    }

    ordered_json dir = ordered_json::array();
    uint64_t offset = 0;
    for (const Param* p : params) {
        dir.push_back(ordered_json{{"name", p->name},
                                   {"rows", p->value.rows},
                                   {"cols", p->value.cols},
                                   {"offset", offset}});
        offset += p->value.size();
    }
    header["tensors"] = std::move(dir);

    const std::string header_bytes = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write bundle: " + path);
    out.write("MRID", 4);
    const uint32_t version = kBundleVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const auto hlen = static_cast<uint32_t>(header_bytes.size());
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (const Param* p : params) {
        std::vector<float> f32(p->value.size());
        for (size_t i = 0; i < f32.size(); ++i) f32[i] = static_cast<float>(p->value.v[i]);
        out.write(reinterpret_cast<const char*>(f32.data()),
                  static_cast<std::streamsize>(f32.size() * 4));
    }
    if (!out) throw std::runtime_error("short write to bundle: " + path);
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bundle: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || bytes.compare(0, 4, "MRID") != 0)
        throw std::runtime_error(path + ": not a model bundle");
    uint32_t version, hlen;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&hlen, bytes.data() + 8, 4);
    if (version != kBundleVersion)
        throw std::runtime_error(path + ": unsupported bundle version " + std::to_string(version) +
                                 " (supported: " + std::to_string(kBundleVersion) + ")");
    if (bytes.size() < 12 + static_cast<size_t>(hlen))
        throw std::runtime_error(path + ": truncated bundle header");

    ordered_json header;
    try {
        header = ordered_json::parse(bytes.substr(12, hlen));
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": corrupt bundle header: " + e.what());
    }

    ModelBundle bundle;
    bundle.kind = model_kind_from_string(header.at("kind").get<std::string>());
    std::vector<DialectLabel> labels;
    for (const auto& l : header.at("labels"))
        labels.push_back({l.at("name").get<std::string>(), l.at("code").get<std::string>(), 0});
    bundle.registry = LabelRegistry(std::move(labels));

    const ModelDims dims = dims_from_json(header.at("dims"));
    const auto n_classes = header.at("n_classes").get<size_t>();
    Vocabulary vocab(granularity_from_string(header.at("text").at("granularity").get<std::string>()),
                     header.at("text").at("vocab").get<std::vector<std::string>>());

    std::vector<Param*> params;
    if (bundle.kind == ModelKind::TextOnly) {
        TextOnlyModel m;
        m.init(std::move(vocab), dims, n_classes, 0);
        bundle.text = std::move(m);
        params = bundle.text->params();
    } else {
        FusionModel m;
        m.init(std::move(vocab), dims, dsp_from_json(header.at("dsp")), n_classes, 0);
        m.dropout_p = header.at("dropout_p").get<double>();
        m.feat_offset = header.at("feat_offset").get<double>();
        m.feat_scale = header.at("feat_scale").get<double>();
        bundle.fusion = std::move(m);
        params = bundle.fusion->params();
    }

    std::unordered_map<std::string, Param*> by_name;
    for (Param* p : params) by_name.emplace(p->name, p);

    const auto& dir = header.at("tensors");
    if (dir.size() != params.size())
        throw std::runtime_error(path + ": tensor directory has " + std::to_string(dir.size()) +
                                 " entries, model needs " + std::to_string(params.size()));
    const size_t payload_off = 12 + static_cast<size_t>(hlen);
    for (const auto& entry : dir) {
        const auto name = entry.at("name").get<std::string>();
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error(path + ": unknown tensor '" + name + "'");
        Param* p = it->second;
        if (entry.at("rows").get<size_t>() != p->value.rows ||
            entry.at("cols").get<size_t>() != p->value.cols)
            throw std::runtime_error(path + ": tensor '" + name + "' has unexpected shape");
        const auto off = entry.at("offset").get<uint64_t>();
        const size_t byte_off = payload_off + static_cast<size_t>(off) * 4;
        const size_t byte_len = p->value.size() * 4;
        if (byte_off + byte_len > bytes.size())
            throw std::runtime_error(path + ": truncated bundle payload at tensor '" + name + "'");
        for (size_t i = 0; i < p->value.size(); ++i) {
            float f;
            std::memcpy(&f, bytes.data() + byte_off + i * 4, 4);
            p->value.v[i] = static_cast<double>(f);
        }
    }
    return bundle;
}

EvalReport evaluate_bundle(const ModelBundle& bundle, const std::vector<Utterance>& test_set) {
    std::vector<int> truth, predicted;
    truth.reserve(test_set.size());
    predicted.reserve(test_set.size());
    for (const Utterance& u : test_set) {
        std::optional<Waveform> audio;
        if (bundle.kind == ModelKind::Fusion) {
            try {
                audio = decode_wav(u.audio_path);
            } catch (const std::exception& e) {
                throw std::runtime_error("utterance '" + u.id + "': " + e.what());
            }
        }
        Prediction pred = predict(bundle, u.transcript_dialectal, audio);
        truth.push_back(u.dialect.index);
        predicted.push_back(pred.label.index);
    }
    return metrics(confusion(truth, predicted, bundle.registry.size()));
}

} // namespace murreid
