#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace murreid {

// One of the 23 Finnish dialect regions of the Samples of Spoken Finnish
// corpus metadata.
struct DialectLabel {
    std::string name;  // full name, e.g. "Kaakkois-Häme"
    std::string code;  // short code, e.g. "KH"
    int index = 0;     // class index 0..22
};

// Closed label set. Name, code and index are each unique and map 1:1.
class LabelRegistry {
public:
    explicit LabelRegistry(std::vector<DialectLabel> labels);

    // The 23-dialect registry used throughout the toolkit.
    static const LabelRegistry& finnish();

    size_t size() const { return labels_.size(); }
    const DialectLabel& at(int index) const;
    const DialectLabel* find_name(std::string_view name) const;
    const DialectLabel* find_code(std::string_view code) const;
    // Resolves a manifest dialect field; names take precedence over codes.
    const DialectLabel* resolve(std::string_view name_or_code) const;
    const std::vector<DialectLabel>& labels() const { return labels_; }

private:
    std::vector<DialectLabel> labels_;
    std::unordered_map<std::string, int> by_name_;
    std::unordered_map<std::string, int> by_code_;
};

// One sentence-aligned corpus sample.
struct Utterance {
    std::string id;
    std::string speaker_id;
    DialectLabel dialect;
    std::string transcript_dialectal;
    std::string transcript_normalized;  // empty when the corpus has none
    std::string audio_path;
    double duration_s = 0.0;
    int sample_rate_hz = 0;
};

enum class Partition { Train, Val, Test };
enum class SplitMode { RandomSentence, SpeakerDisjoint };

std::string to_string(Partition p);
std::string to_string(SplitMode m);
Partition partition_from_string(std::string_view s);
SplitMode split_mode_from_string(std::string_view s);

// Deterministic train/val/test assignment for one manifest.
struct SplitManifest {
    uint64_t seed = 0;
    std::array<double, 3> ratios{0.70, 0.15, 0.15};
    SplitMode mode = SplitMode::RandomSentence;
    // Keyed in manifest order so serialization is reproducible.
    std::vector<std::pair<std::string, Partition>> assignment;

    std::optional<Partition> find(std::string_view id) const;
    std::array<size_t, 3> counts() const;
};

struct CorpusStats {
    std::vector<int64_t> sentences;     // per dialect index
    std::vector<double> audio_seconds;  // per dialect index
    std::vector<int> speakers;          // distinct speakers per dialect index
    int64_t total_sentences = 0;
    int total_speakers = 0;
};

// Manifest TSV: id, speaker_id, dialect_name, duration_s, sample_rate_hz,
// audio_path, transcript_dialectal, transcript_normalized (optional column).
// UTF-8, no header. Errors carry the offending line number.
std::vector<Utterance> parse_manifest(std::istream& in,
                                      const LabelRegistry& registry = LabelRegistry::finnish());
std::vector<Utterance> parse_manifest_file(const std::string& path,
                                           const LabelRegistry& registry = LabelRegistry::finnish());

std::string manifest_to_string(const std::vector<Utterance>& utts);
void write_manifest_file(const std::string& path, const std::vector<Utterance>& utts);

// Keeps utterances strictly shorter than max_s seconds, order preserved.
std::vector<Utterance> filter_by_duration(const std::vector<Utterance>& utts, double max_s = 10.0);

// Random-sentence mode: seeded Fisher-Yates shuffle, contiguous cuts at
// floor(n*train) and floor(n*(train+val)), remainder to test.
// Speaker-disjoint mode: shuffles speakers and assigns whole speakers until
// each partition quota is met or exceeded; needs at least 3 speakers.
SplitManifest split(const std::vector<Utterance>& utts,
                    std::array<double, 3> ratios,
                    uint64_t seed,
                    SplitMode mode);

CorpusStats compute_stats(const std::vector<Utterance>& utts,
                          const LabelRegistry& registry = LabelRegistry::finnish());

// Split TSV: "# seed=<n> ratios=<a>,<b>,<c> mode=<m>" header comment, then
// one "id<TAB>partition" line per utterance.
std::string split_to_string(const SplitManifest& sm);
SplitManifest parse_split(std::istream& in);
void write_split_file(const std::string& path, const SplitManifest& sm);
SplitManifest read_split_file(const std::string& path);

} // namespace murreid
