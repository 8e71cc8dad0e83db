#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace murreid {

enum class Granularity { Word, Char };

std::string to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);

// Word mode: lowercased whitespace tokens with punctuation stripped except
// intra-word apostrophes and hyphens (dialectal transcriptions use both).
// Char mode: Unicode scalar values of the lowercased string, spaces included.
std::vector<std::string> tokenize(std::string_view s, Granularity granularity);

// Frozen token -> index map with PAD=0 and UNK=1 reserved.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary() = default;
    Vocabulary(Granularity granularity, std::vector<std::string> tokens_by_index);

    // Tokens with frequency >= min_count, most frequent first (ties broken
    // lexicographically), truncated to max_size - 2 entries before PAD/UNK
    // are prepended.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                            size_t min_count,
                            size_t max_size,
                            Granularity granularity = Granularity::Word);

    size_t size() const { return tokens_.size(); }
    Granularity granularity() const { return granularity_; }
    int lookup(std::string_view token) const;  // UNK when absent
    const std::string& token(int index) const { return tokens_[static_cast<size_t>(index)]; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    // "token<TAB>index" lines with a "# granularity=<g>" header comment.
    std::string to_string() const;
    static Vocabulary parse(std::istream& in);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    Granularity granularity_ = Granularity::Word;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Fixed-length id vector; positions >= true_length hold PAD.
struct EncodedText {
    std::vector<int> ids;
    size_t true_length = 0;
};

// First min(len, L) ids, right-padded; truncation keeps the prefix.
EncodedText encode_fixed(const std::vector<std::string>& tokens, const Vocabulary& vocab, size_t L);

struct SparseFeatures {
    std::map<int, double> weights;  // feature id -> weight
    size_t dimension = 0;
};

// N-gram vocabulary plus optional smoothed idf weights,
// idf(t) = ln((1+N)/(1+df(t))) + 1.
struct NgramVocab {
    std::unordered_map<std::string, int> index;
    std::vector<double> idf;  // empty for raw counts
};

NgramVocab build_ngram_vocab(const std::vector<std::vector<std::string>>& corpus,
                             int n_lo,
                             int n_hi,
                             Granularity granularity,
                             bool with_idf);

// Counts of all n-grams for n in [n_lo, n_hi]; char mode surrounds the token
// list with boundary markers ^ and $. Multiplied by idf when present.
SparseFeatures ngram_features(const std::vector<std::string>& tokens,
                              int n_lo,
                              int n_hi,
                              const NgramVocab& vocab,
                              Granularity granularity);

// Joins one n-gram window into its vocabulary key (chars concatenated, words
// separated by a space).
std::string ngram_key(const std::vector<std::string>& tokens, size_t start, int n,
                      Granularity granularity);

} // namespace murreid
