#include "murreid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "murreid/dsp.hpp"
#include "murreid/rng.hpp"

namespace murreid {

std::string to_string(MarkerPlacement p) {
    switch (p) {
        case MarkerPlacement::Text: return "text";
        case MarkerPlacement::Audio: return "audio";
        case MarkerPlacement::Both: return "both";
        case MarkerPlacement::Split: return "split";
    }
    return "?";
}

MarkerPlacement placement_from_string(std::string_view s) {
    if (s == "text") return MarkerPlacement::Text;
    if (s == "audio") return MarkerPlacement::Audio;
    if (s == "both") return MarkerPlacement::Both;
    if (s == "split") return MarkerPlacement::Split;
    throw std::invalid_argument("unknown marker placement: " + std::string(s));
}

void SynthConfig::validate() const {
    if (n_classes < 2 || n_classes > 23)
        throw std::invalid_argument("SynthConfig: n_classes must be in [2, 23]");
    if (utterances_per_class < 1)
        throw std::invalid_argument("SynthConfig: utterances_per_class must be >= 1");
    if (p_text < 0.0 || p_text > 1.0)
        throw std::invalid_argument("SynthConfig: p_text must be in [0, 1]");
    if (sentence_len_min < 1 || sentence_len_max < sentence_len_min)
        throw std::invalid_argument("SynthConfig: bad sentence length range");
    if (duration_min_s <= 0.0 || duration_max_s < duration_min_s)
        throw std::invalid_argument("SynthConfig: bad duration range");
    if (duration_max_s >= 10.0)
        throw std::invalid_argument("SynthConfig: durations must stay below 10 s");
    if (sample_rate_hz <= 0) throw std::invalid_argument("SynthConfig: bad sample rate");
    if (speakers_per_class < 1) throw std::invalid_argument("SynthConfig: speakers_per_class must be >= 1");
    std::vector<double> t = tones();
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0 || t[i] >= sample_rate_hz / 2.0)
            throw std::invalid_argument("SynthConfig: tone frequency must be below Nyquist");
        for (size_t j = i + 1; j < t.size(); ++j)
            if (t[i] == t[j]) throw std::invalid_argument("SynthConfig: tone frequencies must be distinct");
    }
}

std::vector<double> SynthConfig::tones() const {
    if (!tone_hz.empty()) {
        if (tone_hz.size() < static_cast<size_t>(n_classes))
            throw std::invalid_argument("SynthConfig: tone table smaller than n_classes");
        return {tone_hz.begin(), tone_hz.begin() + n_classes};
    }
    // Equally spaced on the mel axis; for small class counts this keeps
    // neighbouring tones more than two mel filters apart.
    std::vector<double> t(static_cast<size_t>(n_classes));
    const double mel_lo = 300.0;
    const double mel_hi = 2600.0;
    for (int k = 0; k < n_classes; ++k) {
        const double mel = n_classes == 1
                               ? mel_lo
                               : mel_lo + (mel_hi - mel_lo) * k / static_cast<double>(n_classes - 1);
        t[static_cast<size_t>(k)] = mel_to_hz(mel);
    }
    return t;
}

bool SynthConfig::text_marked(int class_index) const {
    switch (placement) {
        case MarkerPlacement::Text:
        case MarkerPlacement::Both: return true;
        case MarkerPlacement::Audio: return false;
        case MarkerPlacement::Split: return class_index < n_classes / 2;
    }
    return false;
}

bool SynthConfig::audio_marked(int class_index) const {
    switch (placement) {
        case MarkerPlacement::Audio:
        case MarkerPlacement::Both: return true;
        case MarkerPlacement::Text: return false;
        case MarkerPlacement::Split: return class_index >= n_classes / 2;
    }
    return false;
}

namespace {

// Shared filler vocabulary; class-independent by construction.
const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "talo",  "metsä", "järvi",  "kala",   "poika",  "tyttö",  "vanha",  "nuori",
        "iso",   "pieni", "hyvä",   "paha",   "tulee",  "menee",  "sanoo",  "tekee",
        "näkee", "kuulee","antaa",  "ottaa",  "siellä", "täällä", "sitten", "mutta",
        "kun",   "niin",  "joka",   "kaikki", "paljon", "vähän",  "kyllä",  "ei",
        "me",    "te",    "he",     "silloin","ennen",  "jälkeen","kesällä","talvella",
        "aamulla","illalla","leipä","maito",  "pelto",  "lehmä",  "hevonen","koira",
        "kissa", "lintu",
    };
    return words;
}

} // namespace

SynthResult generate(const SynthConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw std::runtime_error("synth: cannot create output directory: " + out_dir);

    const LabelRegistry& registry = LabelRegistry::finnish();
    const std::vector<double> tones = cfg.tones();
    const std::vector<std::string>& fillers = filler_words();

    SplitMix64 rng(cfg.seed);
    SynthResult result;
    result.utterances.reserve(static_cast<size_t>(cfg.n_classes) * cfg.utterances_per_class);

    for (int k = 0; k < cfg.n_classes; ++k) {
        const std::string marker = "murre_" + std::to_string(k);
        for (int i = 0; i < cfg.utterances_per_class; ++i) {
            Utterance u;
            u.id = "synth_" + std::to_string(k) + "_" + std::to_string(i);
            u.speaker_id = "spk" + std::to_string(k) + "_" +
                           std::to_string(i % cfg.speakers_per_class);
            u.dialect = registry.at(k);
            u.sample_rate_hz = cfg.sample_rate_hz;

            // transcript: filler tokens, with the class marker spliced in for
            // text-marked classes with probability p_text
            const int len = cfg.sentence_len_min +
                            static_cast<int>(rng.below(static_cast<uint64_t>(
                                cfg.sentence_len_max - cfg.sentence_len_min + 1)));
            std::vector<std::string> tokens(static_cast<size_t>(len));
            for (auto& t : tokens) t = fillers[static_cast<size_t>(rng.below(fillers.size()))];
            const bool with_text_marker = cfg.text_marked(k) && rng.uniform() < cfg.p_text;
            if (with_text_marker)
                tokens[static_cast<size_t>(rng.below(tokens.size()))] = marker;
            std::string transcript;
            for (size_t t = 0; t < tokens.size(); ++t) {
                if (t > 0) transcript += ' ';
                transcript += tokens[t];
            }
            u.transcript_dialectal = transcript;

            // audio: noise, plus the class tone for audio-marked classes
            const double dur = rng.uniform(cfg.duration_min_s, cfg.duration_max_s);
            const auto n = static_cast<size_t>(std::llround(dur * cfg.sample_rate_hz));
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const bool with_tone = cfg.audio_marked(k);
            const double omega = 2.0 * std::numbers::pi * tones[static_cast<size_t>(k)] /
                                 cfg.sample_rate_hz;
            std::vector<int16_t> pcm(n);
            for (size_t s = 0; s < n; ++s) {
                double a = cfg.noise_amplitude * rng.normal();
                if (with_tone) a += cfg.tone_amplitude * std::sin(omega * static_cast<double>(s) + phase);
                const double clamped = std::clamp(a, -1.0, 1.0);
                pcm[s] = static_cast<int16_t>(std::lround(clamped * 32767.0));
            }
            const std::string wav_name = u.id + ".wav";
            write_wav_pcm16((fs::path(out_dir) / wav_name).string(), pcm, cfg.sample_rate_hz);
            u.audio_path = wav_name;
            u.duration_s = static_cast<double>(n) / cfg.sample_rate_hz;

            result.utterances.push_back(std::move(u));
        }
    }

    result.manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
    write_manifest_file(result.manifest_path, result.utterances);
    return result;
}

std::vector<ClassSignal> describe(const SynthConfig& cfg) {
    cfg.validate();
    const LabelRegistry& registry = LabelRegistry::finnish();
    std::vector<ClassSignal> out;
    out.reserve(static_cast<size_t>(cfg.n_classes));
    for (int k = 0; k < cfg.n_classes; ++k)
        out.push_back({k, registry.at(k).code, cfg.text_marked(k), cfg.audio_marked(k)});
    return out;
}

} // namespace murreid
