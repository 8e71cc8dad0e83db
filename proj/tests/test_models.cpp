#include <doctest.h>

#include <fstream>

#include "murreid/models.hpp"
#include "murreid/synth.hpp"
#include "test_util.hpp"

using namespace murreid;
using nn::Param;
using nn::Tensor2;
using testutil::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// In-memory marker corpus: class k transcripts contain murre_k.
std::vector<Utterance> marker_corpus(int n_classes, int per_class, uint64_t seed) {
    SplitMix64 rng(seed);
    const std::vector<std::string> fillers{"talo", "kala", "iso", "menee", "niin", "vanha"};
    std::vector<Utterance> utts;
    for (int k = 0; k < n_classes; ++k) {
        for (int i = 0; i < per_class; ++i) {
            std::string text = "murre_" + std::to_string(k);
            const size_t len = 4 + rng.below(4);
            for (size_t t = 0; t < len; ++t)
                text += " " + fillers[static_cast<size_t>(rng.below(fillers.size()))];
            utts.push_back(testutil::make_utt(
                "m" + std::to_string(k) + "_" + std::to_string(i),
                "spk" + std::to_string(i % 3), k, 2.0, text));
        }
    }
    return utts;
}

ModelDims tiny_dims() {
    ModelDims d;
    d.embedding_dim = 16;
    d.hidden_dim = 12;
    d.audio_proj_dim = 8;
    d.adaptive_target = 3;
    d.text_fixed_len = 16;
    return d;
}

} // namespace

TEST_CASE("train_text_only learns a separable marker corpus and is deterministic") {
    auto corpus = marker_corpus(4, 24, 5);
    std::vector<Utterance> train, val;
    for (size_t i = 0; i < corpus.size(); ++i)
        (i % 4 == 0 ? val : train).push_back(corpus[i]);

    nn::TrainConfig cfg;
    cfg.epochs = 12;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 8;
    cfg.seed = 13;

    auto [model, report] = train_text_only(train, val, cfg, tiny_dims());
    CHECK(report.val_accuracy.back() >= 0.9);
    CHECK(report.train_loss.front() > report.train_loss.back());
    CHECK(report.config.epochs == 12);
    CHECK(report.steps > 0);
    CHECK(report.selected_epoch >= 1);

    SUBCASE("same seed, same bytes") {
        auto [model2, report2] = train_text_only(train, val, cfg, tiny_dims());
        TempDir dir("det");
        save_bundle(bundle_from(std::move(model)), dir.file("a.mrid"));
        save_bundle(bundle_from(std::move(model2)), dir.file("b.mrid"));
        CHECK(slurp(dir.file("a.mrid")) == slurp(dir.file("b.mrid")));
        CHECK(report.val_accuracy == report2.val_accuracy);
        CHECK(report.train_loss == report2.train_loss);
    }
}

TEST_CASE("training preconditions") {
    auto corpus = marker_corpus(3, 4, 6);
    nn::TrainConfig cfg;
    SUBCASE("epochs=0 is rejected") {
        cfg.epochs = 0;
        CHECK_THROWS_AS(train_text_only(corpus, {}, cfg, tiny_dims()), std::invalid_argument);
    }
    SUBCASE("empty training set is rejected") {
        CHECK_THROWS_AS(train_text_only({}, {}, cfg, tiny_dims()), std::invalid_argument);
    }
    SUBCASE("max_steps caps the optimizer steps") {
        cfg.epochs = 50;
        cfg.batch_size = 4;
        cfg.max_steps = 3;
        auto [model, report] = train_text_only(corpus, {}, cfg, tiny_dims());
        CHECK(report.steps == 3);
    }
}

TEST_CASE("fusion training requires decodable audio and names the utterance") {
    auto corpus = marker_corpus(3, 3, 7);  // audio paths do not exist on disk
    nn::TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_WITH_AS(train_fusion(corpus, {}, cfg, tiny_dims()),
                         doctest::Contains("m0_0"), std::runtime_error);
}

TEST_CASE("full fusion head passes the finite-difference gradient check") {
    // tiny synthetic features; eval-mode dropout, as in the acceptance gate
    SplitMix64 rng(21);
    Vocabulary vocab = Vocabulary::build({{"moi", "murre_0", "terve"}}, 1, 100);
    DspConfig dsp;
    dsp.n_mels = 5;
    ModelDims dims;
    dims.embedding_dim = 4;
    dims.hidden_dim = 3;
    dims.audio_proj_dim = 4;
    dims.adaptive_target = 2;
    dims.text_fixed_len = 6;

    FusionModel m;
    m.init(vocab, dims, dsp, 4, 17);
    Tensor2 feats(6, 5);
    for (double& v : feats.v) v = rng.uniform(-1.0, 1.0);

    auto params_vec = m.params();
    auto fb = [&](bool backward) {
        return fusion_example_loss(m, "moi murre_0 terve", feats, 2, backward);
    };
    CHECK(nn::grad_check(fb, params_vec) < 1e-3);
}

TEST_CASE("one fusion training step moves parameters in BOTH branches") {
    TempDir dir("fusion_step");
    SynthConfig sc;
    sc.n_classes = 2;
    sc.utterances_per_class = 2;
    sc.placement = MarkerPlacement::Both;
    sc.duration_min_s = 0.5;
    sc.duration_max_s = 0.7;
    sc.seed = 3;
    SynthResult synth = generate(sc, dir.path().string());
    for (Utterance& u : synth.utterances)
        u.audio_path = (dir.path() / u.audio_path).string();

    nn::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.max_steps = 1;
    cfg.learning_rate = 0.01;

    auto [model, report] = train_fusion(synth.utterances, {}, cfg, tiny_dims());
    CHECK(report.steps == 1);

    // same init seed and dims, so differing values mean the step updated them
    FusionModel init_copy;
    init_copy.init(model.vocab, model.dims, model.dsp, model.n_classes, cfg.seed);
    auto trained = model.params();
    auto initial = init_copy.params();
    REQUIRE(trained.size() == initial.size());

    bool text_branch_moved = false, audio_branch_moved = false;
    for (size_t i = 0; i < trained.size(); ++i) {
        if (trained[i]->value.v == initial[i]->value.v) continue;
        const std::string& name = trained[i]->name;
        if (name.rfind("embedding", 0) == 0 || name.rfind("text_lstm", 0) == 0)
            text_branch_moved = true;
        if (name.rfind("audio_proj", 0) == 0 || name.rfind("audio_lstm", 0) == 0)
            audio_branch_moved = true;
    }
    CHECK(text_branch_moved);
    CHECK(audio_branch_moved);
}

TEST_CASE("predict") {
    auto corpus = marker_corpus(4, 12, 9);
    nn::TrainConfig cfg;
    cfg.epochs = 14;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 8;
    auto [model, report] = train_text_only(corpus, {}, cfg, tiny_dims());
    ModelBundle bundle = bundle_from(std::move(model));

    SUBCASE("scores form a 23-simplex") {
        Prediction pred = predict(bundle, "murre_2 talo kala");
        REQUIRE(pred.scores.size() == 23);
        double sum = 0.0;
        for (double s : pred.scores) {
            CHECK(s >= 0.0);
            sum += s;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(pred.label.index == 2);
    }
    SUBCASE("empty transcript still yields a valid distribution") {
        Prediction pred = predict(bundle, "");
        REQUIRE(pred.scores.size() == 23);
        double sum = 0.0;
        for (double s : pred.scores) sum += s;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("prediction is a pure function of bundle and inputs") {
        Prediction a = predict(bundle, "murre_1 iso");
        Prediction b = predict(bundle, "murre_1 iso");
        CHECK(a.scores == b.scores);
    }
    SUBCASE("text bundles ignore audio") {
        Waveform w;
        w.sample_rate_hz = 16000;
        w.samples.assign(8000, 0.1);
        Prediction with = predict(bundle, "murre_3", w);
        Prediction without = predict(bundle, "murre_3");
        CHECK(with.scores == without.scores);
    }
}

TEST_CASE("fusion bundles demand audio") {
    TempDir dir("fusion_pred");
    SynthConfig sc;
    sc.n_classes = 2;
    sc.utterances_per_class = 3;
    sc.placement = MarkerPlacement::Both;
    sc.duration_min_s = 0.5;
    sc.duration_max_s = 0.7;
    sc.seed = 5;
    SynthResult synth = generate(sc, dir.path().string());
    for (Utterance& u : synth.utterances)
        u.audio_path = (dir.path() / u.audio_path).string();
    nn::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    auto [model, report] = train_fusion(synth.utterances, {}, cfg, tiny_dims());
    ModelBundle bundle = bundle_from(std::move(model));

    CHECK_THROWS_WITH_AS(predict(bundle, "moi"), doctest::Contains("audio required"),
                         std::invalid_argument);

    Waveform w = decode_wav(synth.utterances[0].audio_path);
    Prediction pred = predict(bundle, synth.utterances[0].transcript_dialectal, w);
    CHECK(pred.scores.size() == 23);
}

TEST_CASE("bundle serialization") {
    auto corpus = marker_corpus(3, 8, 10);
    nn::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    auto [model, report] = train_text_only(corpus, {}, cfg, tiny_dims());
    ModelBundle bundle = bundle_from(std::move(model));
    TempDir dir("bundle");

    SUBCASE("load(save(b)) is bit-identical and predictions agree exactly") {
        save_bundle(bundle, dir.file("m.mrid"));
        ModelBundle loaded = load_bundle(dir.file("m.mrid"));
        save_bundle(loaded, dir.file("m2.mrid"));
        CHECK(slurp(dir.file("m.mrid")) == slurp(dir.file("m2.mrid")));

        SplitMix64 rng(33);
        const std::vector<std::string> words{"murre_0", "murre_1", "talo", "iso", "kala"};
        for (int trial = 0; trial < 100; ++trial) {
            std::string text;
            const size_t len = 1 + rng.below(6);
            for (size_t t = 0; t < len; ++t) {
                if (t) text += ' ';
                text += words[static_cast<size_t>(rng.below(words.size()))];
            }
            Prediction a = predict(bundle, text);
            Prediction b = predict(loaded, text);
            CHECK(a.scores == b.scores);
            CHECK(a.label.index == b.label.index);
        }
    }
    SUBCASE("corrupt magic is rejected as not a bundle") {
        std::ofstream out(dir.file("bad.mrid"), std::ios::binary);
        out << "NOPE" << std::string(64, '\0');
        out.close();
        CHECK_THROWS_WITH_AS(load_bundle(dir.file("bad.mrid")),
                             doctest::Contains("not a model bundle"), std::runtime_error);
    }
    SUBCASE("unsupported version names the supported one") {
        std::ofstream out(dir.file("v999.mrid"), std::ios::binary);
        out << "MRID";
        uint32_t version = 999, hlen = 0;
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&hlen), 4);
        out.close();
        CHECK_THROWS_WITH_AS(load_bundle(dir.file("v999.mrid")),
                             doctest::Contains("supported: 1"), std::runtime_error);
    }
    SUBCASE("truncated payload is detected") {
        save_bundle(bundle, dir.file("full.mrid"));
        std::string bytes = slurp(dir.file("full.mrid"));
        std::ofstream out(dir.file("cut.mrid"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 200));
        out.close();
        CHECK_THROWS_WITH_AS(load_bundle(dir.file("cut.mrid")), doctest::Contains("truncated"),
                             std::runtime_error);
    }
}
