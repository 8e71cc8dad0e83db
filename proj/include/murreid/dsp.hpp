#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace murreid {

struct Waveform {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    int sample_rate_hz = 0;

    double duration_s() const {
        return sample_rate_hz > 0
                   ? static_cast<double>(samples.size()) / sample_rate_hz
                   : 0.0;
    }
};

enum class FeatureKind { LogMel, Mfcc };

// Time-major feature frames, T rows by dim columns.
struct FeatureSequence {
    size_t frames = 0;
    size_t dim = 0;
    std::vector<double> values;  // row-major
    double frame_shift_s = 0.0;
    FeatureKind kind = FeatureKind::LogMel;

    double& at(size_t t, size_t d) { return values[t * dim + d]; }
    double at(size_t t, size_t d) const { return values[t * dim + d]; }
};

struct DspConfig {
    int target_rate_hz = 16000;
    double frame_len_s = 0.025;
    double frame_shift_s = 0.010;
    int fft_size = 512;
    int n_mels = 40;
    int n_mfcc = 13;
    FeatureKind feature_kind = FeatureKind::LogMel;

    int frame_len_samples() const {
        return static_cast<int>(frame_len_s * target_rate_hz + 0.5);
    }
    int frame_shift_samples() const {
        return static_cast<int>(frame_shift_s * target_rate_hz + 0.5);
    }
    size_t feature_dim() const {
        return static_cast<size_t>(feature_kind == FeatureKind::Mfcc ? n_mfcc : n_mels);
    }
    void validate() const;
};

// Log floor inside ln(filterbank * power + eps); keeps silence finite.
inline constexpr double kLogMelEpsilon = 1e-10;

// WAV decode: RIFF/WAVE, PCM16 or IEEE float32, mono or stereo (averaged).
Waveform decode_wav(const std::string& path);
Waveform decode_wav_bytes(const std::string& bytes);

// PCM16 mono writer (used by the synthetic corpus generator).
void write_wav_pcm16(const std::string& path, const std::vector<int16_t>& samples, int rate_hz);

// Linear-interpolation resampler; identity when rates match.
// Output length = round(len * target / source).
Waveform resample(const Waveform& w, int target_hz);

// Iterative radix-2 FFT. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data);

// Magnitude spectrum of a (windowed) frame zero-padded to fft_size;
// returns fft_size/2 + 1 bins.
std::vector<double> fft_magnitude(const std::vector<double>& frame, int fft_size);

// mel(f) = 2595 * log10(1 + f/700)
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters, n_mels rows by fft_size/2+1 columns, centers equally
// spaced on the mel axis between 0 Hz and Nyquist.
struct MelFilterbank {
    int n_mels = 0;
    int n_bins = 0;
    std::vector<double> weights;       // row-major n_mels x n_bins
    std::vector<double> center_hz;     // per filter

    double at(int m, int k) const { return weights[static_cast<size_t>(m) * n_bins + k]; }
};
MelFilterbank mel_filterbank(const DspConfig& cfg);

// Framed log-mel or MFCC features. The waveform must already be at
// cfg.target_rate_hz. Frames use a Hamming window;
// T = 1 + floor((len - frame_len) / frame_shift).
FeatureSequence extract_features(const Waveform& w, const DspConfig& cfg);

// Feature cache: "MRFE" magic, u32 version, u32 T, u32 D, u32 shift in
// microseconds, then T*D little-endian float32 values row-major.
void write_features_file(const std::string& path, const FeatureSequence& fs);
FeatureSequence read_features_file(const std::string& path);

} // namespace murreid
