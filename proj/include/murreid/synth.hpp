#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "murreid/corpus.hpp"

namespace murreid {

enum class MarkerPlacement { Text, Audio, Both, Split };

std::string to_string(MarkerPlacement p);
MarkerPlacement placement_from_string(std::string_view s);

// Controlled synthetic corpus: class k carries a marker token "murre_k" in
// the transcript and/or a pure tone at tone_hz[k] in the audio, on top of
// shared filler vocabulary and noise.
struct SynthConfig {
    int n_classes = 8;                   // uses the first n registry labels
    int utterances_per_class = 200;
    MarkerPlacement placement = MarkerPlacement::Split;
    double p_text = 0.8;                 // chance a text-marked class shows its marker
    std::vector<double> tone_hz;         // empty -> mel-spaced defaults
    double tone_amplitude = 0.3;
    double noise_amplitude = 0.02;
    int sentence_len_min = 6;
    int sentence_len_max = 12;
    double duration_min_s = 0.8;
    double duration_max_s = 1.6;
    int sample_rate_hz = 16000;
    int speakers_per_class = 5;
    uint64_t seed = 42;

    void validate() const;
    // Effective tone table (defaults filled in); distinct, below Nyquist.
    std::vector<double> tones() const;
    bool text_marked(int class_index) const;
    bool audio_marked(int class_index) const;
};

struct SynthResult {
    std::vector<Utterance> utterances;
    std::string manifest_path;
};

// Writes "<out_dir>/manifest.tsv" plus one PCM16 mono WAV per utterance.
// Deterministic under cfg.seed, audio samples included.
SynthResult generate(const SynthConfig& cfg, const std::string& out_dir);

struct ClassSignal {
    int class_index = 0;
    std::string code;
    bool text_separable = false;
    bool audio_separable = false;
};

// Which modality carries the class signal; acceptance tests key their
// assertions off this.
std::vector<ClassSignal> describe(const SynthConfig& cfg);

} // namespace murreid
