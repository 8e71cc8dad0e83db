#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "murreid/corpus.hpp"
#include "murreid/dsp.hpp"
#include "murreid/eval.hpp"
#include "murreid/models.hpp"
#include "murreid/synth.hpp"
#include "murreid/text.hpp"

namespace py = pybind11;
using namespace murreid;

namespace {

py::array_t<double> matrix_to_array(const nn::Tensor2& t) {
    py::array_t<double> out({t.rows, t.cols});
    std::copy(t.v.begin(), t.v.end(), out.mutable_data());
    return out;
}

py::array_t<double> features_to_array(const FeatureSequence& fs) {
    py::array_t<double> out({fs.frames, fs.dim});
    std::copy(fs.values.begin(), fs.values.end(), out.mutable_data());
    return out;
}

Waveform waveform_from(py::array_t<double, py::array::c_style | py::array::forcecast> samples,
                       int rate) {
    Waveform w;
    w.sample_rate_hz = rate;
    w.samples.assign(samples.data(), samples.data() + samples.size());
    return w;
}

std::optional<Waveform> audio_arg(const py::object& audio) {
    if (audio.is_none()) return std::nullopt;
    if (py::isinstance<py::str>(audio)) return decode_wav(audio.cast<std::string>());
    return audio.cast<Waveform>();
}

} // namespace

PYBIND11_MODULE(_murreid, m) {
    m.doc() = "Multimodal Finnish dialect identification toolkit";

    // ---- corpus ----
    py::class_<DialectLabel>(m, "DialectLabel")
        .def_readonly("name", &DialectLabel::name)
        .def_readonly("code", &DialectLabel::code)
        .def_readonly("index", &DialectLabel::index)
        .def("__repr__", [](const DialectLabel& l) {
            return "DialectLabel(" + l.code + ", " + l.name + ")";
        });

    py::class_<Utterance>(m, "Utterance")
        .def(py::init<>())
        .def_readwrite("id", &Utterance::id)
        .def_readwrite("speaker_id", &Utterance::speaker_id)
        .def_readwrite("dialect", &Utterance::dialect)
        .def_readwrite("transcript_dialectal", &Utterance::transcript_dialectal)
        .def_readwrite("transcript_normalized", &Utterance::transcript_normalized)
        .def_readwrite("audio_path", &Utterance::audio_path)
        .def_readwrite("duration_s", &Utterance::duration_s)
        .def_readwrite("sample_rate_hz", &Utterance::sample_rate_hz);

    py::class_<CorpusStats>(m, "CorpusStats")
        .def_readonly("sentences", &CorpusStats::sentences)
        .def_readonly("audio_seconds", &CorpusStats::audio_seconds)
        .def_readonly("speakers", &CorpusStats::speakers)
        .def_readonly("total_sentences", &CorpusStats::total_sentences)
        .def_readonly("total_speakers", &CorpusStats::total_speakers);

    py::class_<SplitManifest>(m, "SplitManifest")
        .def_readonly("seed", &SplitManifest::seed)
        .def_readonly("ratios", &SplitManifest::ratios)
        .def_property_readonly("mode",
                               [](const SplitManifest& sm) { return to_string(sm.mode); })
        .def_property_readonly("assignment",
                               [](const SplitManifest& sm) {
                                   std::vector<std::pair<std::string, std::string>> out;
                                   for (const auto& [id, p] : sm.assignment)
                                       out.emplace_back(id, to_string(p));
                                   return out;
                               })
        .def("counts", &SplitManifest::counts)
        .def("save",
             [](const SplitManifest& sm, const std::string& path) { write_split_file(path, sm); },
             py::arg("path"));

    m.def("registry", [] { return LabelRegistry::finnish().labels(); },
          "The 23-dialect label registry");
    m.def("parse_manifest",
          [](const std::string& path) { return parse_manifest_file(path); }, py::arg("path"));
    m.def("write_manifest", &write_manifest_file, py::arg("path"), py::arg("utterances"));
    m.def("filter_by_duration", &filter_by_duration, py::arg("utterances"),
          py::arg("max_s") = 10.0);
    m.def(
        "split",
        [](const std::vector<Utterance>& utts, std::array<double, 3> ratios, uint64_t seed,
           const std::string& mode) {
            return split(utts, ratios, seed, split_mode_from_string(mode));
        },
        py::arg("utterances"), py::arg("ratios") = std::array<double, 3>{0.7, 0.15, 0.15},
        py::arg("seed") = 42, py::arg("mode") = "random-sentence");
    m.def("write_split", &write_split_file, py::arg("path"), py::arg("split"));
    m.def("read_split", &read_split_file, py::arg("path"));
    m.def("compute_stats",
          [](const std::vector<Utterance>& utts) { return compute_stats(utts); },
          py::arg("utterances"));

    // ---- dsp ----
    py::class_<Waveform>(m, "Waveform")
        .def(py::init(&waveform_from), py::arg("samples"), py::arg("sample_rate_hz"))
        .def_property_readonly("samples",
                               [](const Waveform& w) {
                                   py::array_t<double> out(w.samples.size());
                                   std::copy(w.samples.begin(), w.samples.end(),
                                             out.mutable_data());
                                   return out;
                               })
        .def_readonly("sample_rate_hz", &Waveform::sample_rate_hz)
        .def("duration_s", &Waveform::duration_s);

    py::class_<DspConfig>(m, "DspConfig")
        .def(py::init<>())
        .def_readwrite("target_rate_hz", &DspConfig::target_rate_hz)
        .def_readwrite("frame_len_s", &DspConfig::frame_len_s)
        .def_readwrite("frame_shift_s", &DspConfig::frame_shift_s)
        .def_readwrite("fft_size", &DspConfig::fft_size)
        .def_readwrite("n_mels", &DspConfig::n_mels)
        .def_readwrite("n_mfcc", &DspConfig::n_mfcc)
        .def_property(
            "feature_kind",
            [](const DspConfig& c) {
                return c.feature_kind == FeatureKind::Mfcc ? "mfcc" : "log-mel";
            },
            [](DspConfig& c, const std::string& kind) {
                c.feature_kind = kind == "mfcc" ? FeatureKind::Mfcc : FeatureKind::LogMel;
            });

    m.def("decode_wav", &decode_wav, py::arg("path"));
    m.def("resample", &resample, py::arg("waveform"), py::arg("target_hz"));
    m.def(
        "extract_features",
        [](const Waveform& w, const DspConfig& cfg) {
            return features_to_array(extract_features(w, cfg));
        },
        py::arg("waveform"), py::arg("config") = DspConfig{});
    m.def("fft_magnitude", &fft_magnitude, py::arg("frame"), py::arg("fft_size"));
    m.def("hz_to_mel", &hz_to_mel, py::arg("hz"));
    m.def("mel_to_hz", &mel_to_hz, py::arg("mel"));
    m.def(
        "mel_filterbank",
        [](const DspConfig& cfg) {
            MelFilterbank fb = mel_filterbank(cfg);
            py::array_t<double> out(
                {static_cast<size_t>(fb.n_mels), static_cast<size_t>(fb.n_bins)});
            std::copy(fb.weights.begin(), fb.weights.end(), out.mutable_data());
            return out;
        },
        py::arg("config") = DspConfig{});

    // ---- text ----
    m.def(
        "tokenize",
        [](const std::string& s, const std::string& granularity) {
            return tokenize(s, granularity_from_string(granularity));
        },
        py::arg("text"), py::arg("granularity") = "word");

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_static(
            "build",
            [](const std::vector<std::vector<std::string>>& corpus, size_t min_count,
               size_t max_size, const std::string& granularity) {
                return Vocabulary::build(corpus, min_count, max_size,
                                         granularity_from_string(granularity));
            },
            py::arg("corpus"), py::arg("min_count") = 1, py::arg("max_size") = 50000,
            py::arg("granularity") = "word")
        .def("__len__", &Vocabulary::size)
        .def("lookup", &Vocabulary::lookup, py::arg("token"))
        .def_property_readonly("tokens", &Vocabulary::tokens)
        .def("save", &Vocabulary::save, py::arg("path"))
        .def_static("load", &Vocabulary::load, py::arg("path"));

    m.def(
        "encode_fixed",
        [](const std::vector<std::string>& tokens, const Vocabulary& vocab, size_t length) {
            EncodedText enc = encode_fixed(tokens, vocab, length);
            return py::make_tuple(enc.ids, enc.true_length);
        },
        py::arg("tokens"), py::arg("vocab"), py::arg("length"));

    // ---- models ----
    py::class_<ModelDims>(m, "ModelDims")
        .def(py::init<>())
        .def_readwrite("embedding_dim", &ModelDims::embedding_dim)
        .def_readwrite("hidden_dim", &ModelDims::hidden_dim)
        .def_readwrite("audio_proj_dim", &ModelDims::audio_proj_dim)
        .def_readwrite("adaptive_target", &ModelDims::adaptive_target)
        .def_readwrite("text_fixed_len", &ModelDims::text_fixed_len);

    py::class_<nn::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &nn::TrainConfig::learning_rate)
        .def_readwrite("epochs", &nn::TrainConfig::epochs)
        .def_readwrite("batch_size", &nn::TrainConfig::batch_size)
        .def_readwrite("seed", &nn::TrainConfig::seed)
        .def_readwrite("max_steps", &nn::TrainConfig::max_steps)
        .def_property(
            "optimizer",
            [](const nn::TrainConfig& c) { return nn::to_string(c.optimizer); },
            [](nn::TrainConfig& c, const std::string& o) {
                c.optimizer = nn::optimizer_from_string(o);
            });

    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("train_loss", &TrainReport::train_loss)
        .def_readonly("val_accuracy", &TrainReport::val_accuracy)
        .def_readonly("selected_epoch", &TrainReport::selected_epoch)
        .def_readonly("steps", &TrainReport::steps);

    py::class_<Prediction>(m, "Prediction")
        .def_readonly("label", &Prediction::label)
        .def_readonly("scores", &Prediction::scores);

    py::class_<ModelBundle, std::shared_ptr<ModelBundle>>(m, "ModelBundle")
        .def_property_readonly("kind",
                               [](const ModelBundle& b) { return to_string(b.kind); })
        .def_property_readonly("labels",
                               [](const ModelBundle& b) { return b.registry.labels(); })
        .def(
            "predict",
            [](const ModelBundle& b, const std::string& transcript, const py::object& audio) {
                return predict(b, transcript, audio_arg(audio));
            },
            py::arg("transcript"), py::arg("audio") = py::none())
        .def("save", &save_bundle, py::arg("path"));

    m.def(
        "train_text_only",
        [](const std::vector<Utterance>& train, const std::vector<Utterance>& val,
           const nn::TrainConfig& cfg, const ModelDims& dims) {
            auto [model, report] = train_text_only(train, val, cfg, dims);
            return py::make_tuple(
                std::make_shared<ModelBundle>(bundle_from(std::move(model))), report);
        },
        py::arg("train"), py::arg("val"), py::arg("config") = nn::TrainConfig{},
        py::arg("dims") = ModelDims{});
    m.def(
        "train_fusion",
        [](const std::vector<Utterance>& train, const std::vector<Utterance>& val,
           const nn::TrainConfig& cfg, const ModelDims& dims, const DspConfig& dsp) {
            auto [model, report] = train_fusion(train, val, cfg, dims, dsp);
            return py::make_tuple(
                std::make_shared<ModelBundle>(bundle_from(std::move(model))), report);
        },
        py::arg("train"), py::arg("val"), py::arg("config") = nn::TrainConfig{},
        py::arg("dims") = ModelDims{}, py::arg("dsp") = DspConfig{});
    m.def("load_bundle",
          [](const std::string& path) {
              return std::make_shared<ModelBundle>(load_bundle(path));
          },
          py::arg("path"));

    // ---- eval ----
    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("precision", &EvalReport::precision)
        .def_readonly("recall", &EvalReport::recall)
        .def_readonly("f1", &EvalReport::f1)
        .def_readonly("support", &EvalReport::support)
        .def_readonly("accuracy", &EvalReport::accuracy)
        .def_readonly("macro_f1", &EvalReport::macro_f1);

    m.def(
        "confusion",
        [](const std::vector<int>& truth, const std::vector<int>& pred, size_t n_classes) {
            ConfusionMatrix cm = confusion(truth, pred, n_classes);
            py::array_t<int64_t> out({n_classes, n_classes});
            std::copy(cm.counts.begin(), cm.counts.end(), out.mutable_data());
            return out;
        },
        py::arg("truth"), py::arg("predicted"), py::arg("n_classes"));
    m.def(
        "metrics",
        [](const std::vector<int>& truth, const std::vector<int>& pred, size_t n_classes) {
            return metrics(confusion(truth, pred, n_classes));
        },
        py::arg("truth"), py::arg("predicted"), py::arg("n_classes"));
    m.def(
        "render_report",
        [](const EvalReport& report, const std::string& style, bool full_precision) {
            return render_report(report, LabelRegistry::finnish(),
                                 style == "table" ? ReportStyle::Table : ReportStyle::Tsv,
                                 full_precision);
        },
        py::arg("report"), py::arg("style") = "tsv", py::arg("full_precision") = false);
    m.def(
        "evaluate_bundle",
        [](const ModelBundle& bundle, const std::vector<Utterance>& test) {
            return evaluate_bundle(bundle, test);
        },
        py::arg("bundle"), py::arg("test_set"));

    // ---- synth ----
    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("n_classes", &SynthConfig::n_classes)
        .def_readwrite("utterances_per_class", &SynthConfig::utterances_per_class)
        .def_property(
            "placement",
            [](const SynthConfig& c) { return to_string(c.placement); },
            [](SynthConfig& c, const std::string& p) { c.placement = placement_from_string(p); })
        .def_readwrite("p_text", &SynthConfig::p_text)
        .def_readwrite("tone_amplitude", &SynthConfig::tone_amplitude)
        .def_readwrite("noise_amplitude", &SynthConfig::noise_amplitude)
        .def_readwrite("duration_min_s", &SynthConfig::duration_min_s)
        .def_readwrite("duration_max_s", &SynthConfig::duration_max_s)
        .def_readwrite("seed", &SynthConfig::seed);

    py::class_<SynthResult>(m, "SynthResult")
        .def_readonly("utterances", &SynthResult::utterances)
        .def_readonly("manifest_path", &SynthResult::manifest_path);

    py::class_<ClassSignal>(m, "ClassSignal")
        .def_readonly("class_index", &ClassSignal::class_index)
        .def_readonly("code", &ClassSignal::code)
        .def_readonly("text_separable", &ClassSignal::text_separable)
        .def_readonly("audio_separable", &ClassSignal::audio_separable);

    m.def("synth_generate", &generate, py::arg("config"), py::arg("out_dir"));
    m.def("synth_describe", &describe, py::arg("config"));
}
