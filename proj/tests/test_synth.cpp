#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "murreid/dsp.hpp"
#include "murreid/synth.hpp"
#include "murreid/text.hpp"
#include "test_util.hpp"

using namespace murreid;
using testutil::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SynthConfig small_config(MarkerPlacement placement) {
    SynthConfig cfg;
    cfg.n_classes = 4;
    cfg.utterances_per_class = 12;
    cfg.placement = placement;
    cfg.duration_min_s = 0.5;
    cfg.duration_max_s = 0.8;
    cfg.seed = 71;
    return cfg;
}

} // namespace

TEST_CASE("generate text mode with p_text=1 puts the marker in every transcript") {
    TempDir dir("synth_text");
    SynthConfig cfg = small_config(MarkerPlacement::Text);
    cfg.p_text = 1.0;
    SynthResult res = generate(cfg, dir.path().string());
    REQUIRE(res.utterances.size() == 48);
    for (const Utterance& u : res.utterances) {
        const std::string marker = "murre_" + std::to_string(u.dialect.index);
        CHECK(u.transcript_dialectal.find(marker) != std::string::npos);
    }
}

TEST_CASE("generate audio mode keeps transcripts class-independent (chi-square)") {
    TempDir dir("synth_audio");
    SynthConfig cfg = small_config(MarkerPlacement::Audio);
    cfg.utterances_per_class = 60;
    SynthResult res = generate(cfg, dir.path().string());

    // no marker tokens anywhere
    for (const Utterance& u : res.utterances)
        CHECK(u.transcript_dialectal.find("murre_") == std::string::npos);

    // homogeneity of per-class token distributions
    std::map<std::string, std::vector<double>> counts;  // token -> per-class counts
    std::vector<double> class_totals(static_cast<size_t>(cfg.n_classes), 0.0);
    for (const Utterance& u : res.utterances) {
        for (const std::string& tok : tokenize(u.transcript_dialectal, Granularity::Word)) {
            auto& row = counts[tok];
            row.resize(static_cast<size_t>(cfg.n_classes), 0.0);
            row[static_cast<size_t>(u.dialect.index)] += 1.0;
            class_totals[static_cast<size_t>(u.dialect.index)] += 1.0;
        }
    }
    double grand = 0.0;
    for (double c : class_totals) grand += c;
    double chi2 = 0.0;
    size_t dof = 0;
    for (auto& [tok, row] : counts) {
        double tok_total = 0.0;
        for (double c : row) tok_total += c;
        for (size_t k = 0; k < row.size(); ++k) {
            const double expected = tok_total * class_totals[k] / grand;
            if (expected > 0) chi2 += (row[k] - expected) * (row[k] - expected) / expected;
        }
        dof += row.size() - 1;
    }
    // chi-square mean is dof, sd is sqrt(2 dof); 5 sigma leaves no flakiness
    CHECK(chi2 < static_cast<double>(dof) + 5.0 * std::sqrt(2.0 * static_cast<double>(dof)));
}

TEST_CASE("generate is balanced and within the duration budget") {
    TempDir dir("synth_bal");
    SynthConfig cfg = small_config(MarkerPlacement::Both);
    cfg.utterances_per_class = 50;
    SynthResult res = generate(cfg, dir.path().string());
    REQUIRE(res.utterances.size() == 200);
    std::vector<int> per_class(4, 0);
    for (const Utterance& u : res.utterances) {
        per_class[static_cast<size_t>(u.dialect.index)]++;
        CHECK(u.duration_s < 10.0);
    }
    for (int c : per_class) CHECK(c == 50);
    CHECK(filter_by_duration(res.utterances, 10.0).size() == res.utterances.size());
}

TEST_CASE("generated WAVs decode and carry the class tone") {
    TempDir dir("synth_wav");
    SynthConfig cfg = small_config(MarkerPlacement::Audio);
    cfg.utterances_per_class = 3;
    SynthResult res = generate(cfg, dir.path().string());
    const std::vector<double> tones = cfg.tones();

    for (const Utterance& u : res.utterances) {
        Waveform w = decode_wav((dir.path() / u.audio_path).string());
        CHECK(w.sample_rate_hz == cfg.sample_rate_hz);
        CHECK(w.duration_s() == doctest::Approx(u.duration_s));

        // dominant DFT bin sits at the class tone
        const size_t n = 4096;
        REQUIRE(w.samples.size() >= n);
        std::vector<double> frame(w.samples.begin(), w.samples.begin() + n);
        auto mags = testutil::naive_dft_magnitude(frame, n);
        size_t peak = 1;
        for (size_t k = 1; k < mags.size(); ++k)
            if (mags[k] > mags[peak]) peak = k;
        const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / n;
        CHECK(std::abs(static_cast<double>(peak) * bin_hz -
                       tones[static_cast<size_t>(u.dialect.index)]) <= 2.0 * bin_hz);
    }
}

TEST_CASE("generation is bit-reproducible under the seed, audio included") {
    TempDir a("synth_rep_a");
    TempDir b("synth_rep_b");
    SynthConfig cfg = small_config(MarkerPlacement::Split);
    SynthResult ra = generate(cfg, a.path().string());
    SynthResult rb = generate(cfg, b.path().string());
    CHECK(slurp(ra.manifest_path) == slurp(rb.manifest_path));
    for (const Utterance& u : ra.utterances)
        CHECK(slurp((a.path() / u.audio_path).string()) ==
              slurp((b.path() / u.audio_path).string()));

    SUBCASE("parsing the manifest back gives the same utterances") {
        auto parsed = parse_manifest_file(ra.manifest_path);
        REQUIRE(parsed.size() == ra.utterances.size());
        CHECK(manifest_to_string(parsed) == manifest_to_string(ra.utterances));
    }
}

TEST_CASE("describe maps placement onto per-class separability") {
    SUBCASE("split: first half text, second half audio") {
        SynthConfig cfg = small_config(MarkerPlacement::Split);
        auto signals = describe(cfg);
        REQUIRE(signals.size() == 4);
        CHECK(signals[0].text_separable);
        CHECK_FALSE(signals[0].audio_separable);
        CHECK(signals[1].text_separable);
        CHECK_FALSE(signals[1].audio_separable);
        CHECK_FALSE(signals[2].text_separable);
        CHECK(signals[2].audio_separable);
        CHECK_FALSE(signals[3].text_separable);
        CHECK(signals[3].audio_separable);
    }
    SUBCASE("both: every class separable in each modality") {
        for (const auto& s : describe(small_config(MarkerPlacement::Both))) {
            CHECK(s.text_separable);
            CHECK(s.audio_separable);
        }
    }
    SUBCASE("text: audio carries no class signal") {
        for (const auto& s : describe(small_config(MarkerPlacement::Text))) {
            CHECK(s.text_separable);
            CHECK_FALSE(s.audio_separable);
        }
    }
}

TEST_CASE("synth config validation") {
    SynthConfig cfg = small_config(MarkerPlacement::Both);
    SUBCASE("durations must stay under 10 s") {
        cfg.duration_max_s = 10.5;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("tones above Nyquist are rejected") {
        cfg.tone_hz = {100.0, 200.0, 300.0, 9000.0};
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("p_text outside [0,1] is rejected") {
        cfg.p_text = 1.5;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("class count beyond the registry is rejected") {
        cfg.n_classes = 24;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}
