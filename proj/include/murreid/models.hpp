#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "murreid/corpus.hpp"
#include "murreid/dsp.hpp"
#include "murreid/eval.hpp"
#include "murreid/nn.hpp"
#include "murreid/text.hpp"

namespace murreid {

// Desk-scale sizes standing in for the pretrained encoders.
struct ModelDims {
    size_t embedding_dim = 64;
    size_t hidden_dim = 64;
    size_t audio_proj_dim = 64;
    size_t adaptive_target = 8;  // audio pooling rows
    size_t text_fixed_len = 64;  // fixed text input length L
};

enum class ModelKind { TextOnly, Fusion };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

// Dialectal text -> embedding -> two bi-LSTM layers -> attention pooling ->
// dense head over the dialect classes.
struct TextOnlyModel {
    ModelDims dims;
    Vocabulary vocab;
    size_t n_classes = 23;
    nn::Param embedding;  // V x E
    nn::BiLstmParams lstm1, lstm2;
    nn::AttentionParams attention;  // over 2H
    nn::Param head_W, head_b;

    void init(Vocabulary v, const ModelDims& d, size_t n_classes, uint64_t seed);
    std::vector<nn::Param*> params();
    std::vector<const nn::Param*> params() const;
};

// Two parallel branches joined by concatenation before a shared head:
// text = embedding + bi-LSTM + global average pooling;
// audio = frame projection + bi-LSTM + adaptive average pooling, flattened.
struct FusionModel {
    ModelDims dims;
    Vocabulary vocab;
    DspConfig dsp;
    size_t n_classes = 23;
    double dropout_p = 0.2;
    // fixed affine rescale of log-mel values so silence maps to 0
    double feat_offset = -23.025850929940457;  // ln(1e-10)
    double feat_scale = 0.1;
    nn::Param embedding;
    nn::BiLstmParams text_lstm;
    nn::Param audio_proj_W, audio_proj_b;
    nn::BiLstmParams audio_lstm;
    nn::Param head_W, head_b;

    void init(Vocabulary v, const ModelDims& d, const DspConfig& dsp_cfg, size_t n_classes,
              uint64_t seed);
    size_t fused_dim() const;
    std::vector<nn::Param*> params();
    std::vector<const nn::Param*> params() const;
};

struct TrainReport {
    std::vector<double> train_loss;    // per epoch
    std::vector<double> val_accuracy;  // per epoch
    int selected_epoch = 0;            // 1-based; argmax val accuracy, earliest tie
    int64_t steps = 0;
    nn::TrainConfig config;            // echo of the effective configuration
};

// Shuffled mini-batch training with per-epoch validation; the weights of the
// best validation epoch are kept. Deterministic under cfg.seed.
std::pair<TextOnlyModel, TrainReport> train_text_only(
    const std::vector<Utterance>& train,
    const std::vector<Utterance>& val,
    const nn::TrainConfig& cfg,
    const ModelDims& dims = {},
    const LabelRegistry& registry = LabelRegistry::finnish());

// As train_text_only; every training utterance must have decodable audio.
std::pair<FusionModel, TrainReport> train_fusion(
    const std::vector<Utterance>& train,
    const std::vector<Utterance>& val,
    const nn::TrainConfig& cfg,
    const ModelDims& dims = {},
    const DspConfig& dsp = {},
    const LabelRegistry& registry = LabelRegistry::finnish());

// Serializable model container. Weights are float32-representable so the
// on-disk payload round-trips bit-exactly.
struct ModelBundle {
    ModelKind kind = ModelKind::TextOnly;
    LabelRegistry registry = LabelRegistry::finnish();
    std::optional<TextOnlyModel> text;
    std::optional<FusionModel> fusion;
};

ModelBundle bundle_from(TextOnlyModel model, const LabelRegistry& registry = LabelRegistry::finnish());
ModelBundle bundle_from(FusionModel model, const LabelRegistry& registry = LabelRegistry::finnish());

struct Prediction {
    DialectLabel label;                   // argmax, ties to the lowest index
    std::vector<double> scores;           // probability per registry class
};

// Eval-mode forward pass. Fusion bundles require audio; text bundles ignore it.
Prediction predict(const ModelBundle& bundle, const std::string& transcript,
                   const std::optional<Waveform>& audio = std::nullopt);

// Resampling + log-mel extraction + the bundle's affine feature rescale.
nn::Tensor2 prepare_audio_features(const Waveform& w, const DspConfig& dsp,
                                   double offset, double scale);

// Single-example eval-mode forward passes.
std::vector<double> text_logits(const TextOnlyModel& m, const std::string& transcript);
std::vector<double> fusion_logits(const FusionModel& m, const std::string& transcript,
                                  const nn::Tensor2& feats);

// Single-example cross-entropy; with backward=true accumulates parameter
// gradients scaled by grad_scale. training=true applies the fusion dropout
// mask derived from dropout_seed. Used by the training loops and the
// finite-difference gradient checks.
double text_example_loss(TextOnlyModel& m, const std::string& transcript, int label,
                         bool backward, double grad_scale = 1.0);
double fusion_example_loss(FusionModel& m, const std::string& transcript,
                           const nn::Tensor2& feats, int label, bool backward,
                           double grad_scale = 1.0, bool training = false,
                           uint64_t dropout_seed = 0);

// Bundle file: "MRID" magic, u32 version, u32 header length, UTF-8 JSON
// header (configs, label registry, tensor directory), float32 payloads in
// directory order, little-endian.
inline constexpr uint32_t kBundleVersion = 1;
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// Runs predict over utterances (audio loaded from utt.audio_path for fusion
// bundles) and aggregates a confusion-matrix report.
EvalReport evaluate_bundle(const ModelBundle& bundle, const std::vector<Utterance>& test_set);

} // namespace murreid
