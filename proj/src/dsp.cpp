#include "murreid/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace murreid {

void DspConfig::validate() const {
    if (target_rate_hz <= 0) throw std::invalid_argument("DspConfig: target_rate_hz must be positive");
    if (frame_len_s <= 0.0 || frame_shift_s <= 0.0)
        throw std::invalid_argument("DspConfig: frame length and shift must be positive");
    if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
        throw std::invalid_argument("DspConfig: fft_size must be a power of two");
    if (fft_size < frame_len_samples())
        throw std::invalid_argument("DspConfig: fft_size smaller than frame length in samples");
    if (n_mels <= 0 || n_mfcc <= 0 || n_mfcc > n_mels)
        throw std::invalid_argument("DspConfig: need 0 < n_mfcc <= n_mels");
}

namespace {

uint32_t read_u32(const char* p) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

uint16_t read_u16(const char* p) {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

Waveform decode_wav_impl(const std::string& bytes, const std::string& what) {
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
        throw std::runtime_error(what + ": not a RIFF/WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    size_t data_off = 0, data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        std::string cid = bytes.substr(pos, 4);
        uint32_t csize = read_u32(bytes.data() + pos + 4);
        size_t body = pos + 8;
        if (body + csize > bytes.size()) {
            if (cid == "data" || cid == "fmt ")
                throw std::runtime_error(what + ": truncated '" + cid + "' chunk");
            break;
        }
        if (cid == "fmt ") {
            if (csize < 16) throw std::runtime_error(what + ": fmt chunk too small");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (cid == "data") {
            data_off = body;
            data_len = csize;
        }
        pos = body + csize + (csize & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw std::runtime_error(what + ": missing fmt chunk");
    if (data_off == 0 && data_len == 0) throw std::runtime_error(what + ": missing data chunk");
    if (channels == 0 || channels > 2)
        throw std::runtime_error(what + ": unsupported channel count " + std::to_string(channels));
    if (rate == 0) throw std::runtime_error(what + ": zero sample rate");

    const bool pcm16 = (format == 1 && bits == 16);
    const bool f32 = (format == 3 && bits == 32);
    if (!pcm16 && !f32)
        throw std::runtime_error(what + ": unsupported codec (format=" + std::to_string(format) +
                                 ", bits=" + std::to_string(bits) + "); need PCM16 or float32");

    const size_t bytes_per_sample = pcm16 ? 2 : 4;
    const size_t frame_bytes = bytes_per_sample * channels;
    const size_t n_frames = data_len / frame_bytes;
    if (n_frames == 0) throw std::runtime_error(what + ": zero-length audio");

    Waveform w;
    w.sample_rate_hz = static_cast<int>(rate);
    w.samples.resize(n_frames);
    const char* data = bytes.data() + data_off;
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (size_t c = 0; c < channels; ++c) {
            const char* p = data + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                int16_t s;
                std::memcpy(&s, p, 2);
                acc += static_cast<double>(s) / 32768.0;
            } else {
                float s;
                std::memcpy(&s, p, 4);
                acc += static_cast<double>(s);
            }
        }
        double v = acc / channels;
        w.samples[i] = std::clamp(v, -1.0, 1.0);
    }
    return w;
}

} // namespace

Waveform decode_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wav file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_wav_impl(bytes, path);
}

Waveform decode_wav_bytes(const std::string& bytes) {
    return decode_wav_impl(bytes, "wav data");
}

void write_wav_pcm16(const std::string& path, const std::vector<int16_t>& samples, int rate_hz) {
    if (samples.empty()) throw std::invalid_argument("write_wav_pcm16: no samples");
    if (rate_hz <= 0) throw std::invalid_argument("write_wav_pcm16: bad sample rate");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write wav file: " + path);

    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

    const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<uint32_t>(rate_hz));
    put_u32(static_cast<uint32_t>(rate_hz) * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_bytes);
    out.write(reinterpret_cast<const char*>(samples.data()), data_bytes);
    if (!out) throw std::runtime_error("short write to wav file: " + path);
}

Waveform resample(const Waveform& w, int target_hz) {
    if (target_hz <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (w.sample_rate_hz <= 0) throw std::invalid_argument("resample: source rate must be positive");
    if (w.samples.empty()) throw std::invalid_argument("resample: empty waveform");
    if (target_hz == w.sample_rate_hz) return w;

    const size_t n = w.samples.size();
    const auto out_len = static_cast<size_t>(std::llround(
        static_cast<double>(n) * target_hz / w.sample_rate_hz));

    Waveform out;
    out.sample_rate_hz = target_hz;
    out.samples.resize(std::max<size_t>(out_len, 1));
    const double step = static_cast<double>(w.sample_rate_hz) / target_hz;
    for (size_t i = 0; i < out.samples.size(); ++i) {
        double pos = static_cast<double>(i) * step;
        auto i0 = static_cast<size_t>(pos);
        if (i0 >= n - 1) {
            out.samples[i] = w.samples[n - 1];
            continue;
        }
        double frac = pos - static_cast<double>(i0);
        out.samples[i] = w.samples[i0] * (1.0 - frac) + w.samples[i0 + 1] * frac;
    }
    return out;
}

void fft_inplace(std::vector<std::complex<double>>& data) {
    const size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: size must be a power of two, got " + std::to_string(n));

    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (size_t i = 0; i < n; i += len) {
            for (size_t j = 0; j < len / 2; ++j) {
                std::complex<double> w = std::polar(1.0, ang * static_cast<double>(j));
                std::complex<double> u = data[i + j];
                std::complex<double> v = data[i + j + len / 2] * w;
                data[i + j] = u + v;
                data[i + j + len / 2] = u - v;
            }
        }
    }
}

std::vector<double> fft_magnitude(const std::vector<double>& frame, int fft_size) {
    if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
        throw std::invalid_argument("fft_magnitude: fft_size must be a power of two, got " +
                                    std::to_string(fft_size));
    if (frame.size() > static_cast<size_t>(fft_size))
        throw std::invalid_argument("fft_magnitude: frame longer than fft_size");

    std::vector<std::complex<double>> data(static_cast<size_t>(fft_size));
    for (size_t i = 0; i < frame.size(); ++i) data[i] = frame[i];
    fft_inplace(data);

    std::vector<double> mags(static_cast<size_t>(fft_size / 2 + 1));
    for (size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(data[k]);
    return mags;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(const DspConfig& cfg) {
    cfg.validate();
    MelFilterbank fb;
    fb.n_mels = cfg.n_mels;
    fb.n_bins = cfg.fft_size / 2 + 1;
    fb.weights.assign(static_cast<size_t>(fb.n_mels) * fb.n_bins, 0.0);
    fb.center_hz.resize(static_cast<size_t>(fb.n_mels));

    const double nyquist = cfg.target_rate_hz / 2.0;
    const double mel_max = hz_to_mel(nyquist);
    std::vector<double> edges_hz(static_cast<size_t>(cfg.n_mels) + 2);
    for (size_t j = 0; j < edges_hz.size(); ++j)
        edges_hz[j] = mel_to_hz(mel_max * static_cast<double>(j) / (cfg.n_mels + 1));

    const double bin_hz = static_cast<double>(cfg.target_rate_hz) / cfg.fft_size;
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = edges_hz[static_cast<size_t>(m)];
        const double mid = edges_hz[static_cast<size_t>(m) + 1];
        const double hi = edges_hz[static_cast<size_t>(m) + 2];
        fb.center_hz[static_cast<size_t>(m)] = mid;
        for (int k = 0; k < fb.n_bins; ++k) {
            const double f = bin_hz * k;
            double w = 0.0;
            if (f > lo && f <= mid)
                w = (f - lo) / (mid - lo);
            else if (f > mid && f < hi)
                w = (hi - f) / (hi - mid);
            fb.weights[static_cast<size_t>(m) * fb.n_bins + k] = w;
        }
    }
    return fb;
}

namespace {

// DCT-II with orthonormal scaling, truncated to n_out coefficients.
void dct2(const std::vector<double>& x, std::vector<double>& out, int n_out) {
    const size_t m = x.size();
    out.resize(static_cast<size_t>(n_out));
    for (int k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (size_t i = 0; i < m; ++i)
            acc += x[i] * std::cos(std::numbers::pi * k * (2.0 * static_cast<double>(i) + 1.0) /
                                   (2.0 * static_cast<double>(m)));
        const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(m))
                                    : std::sqrt(2.0 / static_cast<double>(m));
        out[static_cast<size_t>(k)] = acc * scale;
    }
}

} // namespace

FeatureSequence extract_features(const Waveform& w, const DspConfig& cfg) {
    cfg.validate();
    if (w.sample_rate_hz != cfg.target_rate_hz)
        throw std::invalid_argument("extract_features: waveform is at " +
                                    std::to_string(w.sample_rate_hz) + " Hz, expected " +
                                    std::to_string(cfg.target_rate_hz) + " Hz (resample first)");

    const size_t flen = static_cast<size_t>(cfg.frame_len_samples());
    const size_t shift = static_cast<size_t>(cfg.frame_shift_samples());
    if (w.samples.size() < flen) throw std::runtime_error("extract_features: audio too short");
    const size_t n_frames = 1 + (w.samples.size() - flen) / shift;

    const MelFilterbank fb = mel_filterbank(cfg);

    std::vector<double> window(flen);
    for (size_t i = 0; i < flen; ++i)
        window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                           static_cast<double>(flen - 1));

    FeatureSequence fs;
    fs.frames = n_frames;
    fs.dim = cfg.feature_dim();
    fs.frame_shift_s = cfg.frame_shift_s;
    fs.kind = cfg.feature_kind;
    fs.values.resize(n_frames * fs.dim);

    std::vector<double> frame(flen);
    std::vector<double> logmel(static_cast<size_t>(cfg.n_mels));
    std::vector<double> mfcc;
    for (size_t t = 0; t < n_frames; ++t) {
        for (size_t i = 0; i < flen; ++i) frame[i] = w.samples[t * shift + i] * window[i];
        std::vector<double> mags = fft_magnitude(frame, cfg.fft_size);
        for (int m = 0; m < cfg.n_mels; ++m) {
            double e = 0.0;
            for (int k = 0; k < fb.n_bins; ++k)
                e += fb.at(m, k) * mags[static_cast<size_t>(k)] * mags[static_cast<size_t>(k)];
            logmel[static_cast<size_t>(m)] = std::log(e + kLogMelEpsilon);
        }
        if (cfg.feature_kind == FeatureKind::Mfcc) {
            dct2(logmel, mfcc, cfg.n_mfcc);
            for (size_t d = 0; d < fs.dim; ++d) fs.at(t, d) = mfcc[d];
        } else {
            for (size_t d = 0; d < fs.dim; ++d) fs.at(t, d) = logmel[d];
        }
    }
    return fs;
}

void write_features_file(const std::string& path, const FeatureSequence& fs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write feature file: " + path);
    out.write("MRFE", 4);
    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(1);
    put_u32(static_cast<uint32_t>(fs.frames));
    put_u32(static_cast<uint32_t>(fs.dim));
    put_u32(static_cast<uint32_t>(std::llround(fs.frame_shift_s * 1e6)));
    std::vector<float> f32(fs.values.size());
    for (size_t i = 0; i < fs.values.size(); ++i) f32[i] = static_cast<float>(fs.values[i]);
    out.write(reinterpret_cast<const char*>(f32.data()),
              static_cast<std::streamsize>(f32.size() * 4));
    if (!out) throw std::runtime_error("short write to feature file: " + path);
}

FeatureSequence read_features_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "MRFE")
        throw std::runtime_error(path + ": not a feature cache file");
    auto get_u32 = [&]() {
        uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw std::runtime_error(path + ": truncated feature cache header");
        return v;
    };
    uint32_t version = get_u32();
    if (version != 1)
        throw std::runtime_error(path + ": unsupported feature cache version " +
                                 std::to_string(version) + " (supported: 1)");
    FeatureSequence fs;
    fs.frames = get_u32();
    fs.dim = get_u32();
    fs.frame_shift_s = static_cast<double>(get_u32()) * 1e-6;
    std::vector<float> f32(fs.frames * fs.dim);
    in.read(reinterpret_cast<char*>(f32.data()), static_cast<std::streamsize>(f32.size() * 4));
    if (!in) throw std::runtime_error(path + ": truncated feature payload");
    fs.values.assign(f32.begin(), f32.end());
    return fs;
}

} // namespace murreid
