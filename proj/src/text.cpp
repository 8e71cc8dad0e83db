#include "murreid/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace murreid {

std::string to_string(Granularity g) { return g == Granularity::Word ? "word" : "char"; }

Granularity granularity_from_string(std::string_view s) {
    if (s == "word") return Granularity::Word;
    if (s == "char") return Granularity::Char;
    throw std::invalid_argument("unknown granularity: " + std::string(s));
}

namespace {

// Decodes one UTF-8 codepoint starting at i; invalid bytes decode as U+FFFD
// so arbitrary input never throws.
uint32_t decode_utf8(std::string_view s, size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        uint32_t cp = (b0 & 0x1Fu) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        uint32_t cp = (b0 & 0x0Fu) << 12 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        uint32_t cp = (b0 & 0x07u) << 18 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                      (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
        i += 4;
        return cp;
    }
    i += 1;
    return 0xFFFD;
}

void encode_utf8(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Lowercasing for ASCII, Latin-1 Supplement and Latin Extended-A; covers
// standard Finnish orthography and the dialect transcription characters.
uint32_t to_lower(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp == 0x130) return 'i';
    if (cp >= 0x100 && cp <= 0x137 && (cp & 1) == 0) return cp + 1;
    if (cp >= 0x139 && cp <= 0x148 && (cp & 1) == 1) return cp + 1;
    if (cp >= 0x14A && cp <= 0x177 && (cp & 1) == 0) return cp + 1;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E && (cp & 1) == 1) return cp + 1;
    return cp;
}

bool is_space_cp(uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
           cp == 0xA0 || cp == 0x2028 || cp == 0x2029;
}

// Apostrophes and hyphens survive inside a word.
bool is_joiner_cp(uint32_t cp) {
    return cp == '\'' || cp == '-' || cp == 0x2019 || cp == 0x2010;
}

bool is_punct_cp(uint32_t cp) {
    if (is_joiner_cp(cp)) return false;
    if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
        (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E))
        return true;
    if (cp == 0xA1 || cp == 0xA7 || cp == 0xAB || cp == 0xB7 || cp == 0xBB || cp == 0xBF)
        return true;
    if (cp >= 0x2000 && cp <= 0x206F) return true;
    return false;
}

std::vector<uint32_t> decode_lower(std::string_view s) {
    std::vector<uint32_t> cps;
    cps.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) cps.push_back(to_lower(decode_utf8(s, i)));
    return cps;
}

} // namespace

std::vector<std::string> tokenize(std::string_view s, Granularity granularity) {
    std::vector<uint32_t> cps = decode_lower(s);
    std::vector<std::string> tokens;

    if (granularity == Granularity::Char) {
        for (uint32_t cp : cps) {
            std::string t;
            encode_utf8(cp, t);
            tokens.push_back(std::move(t));
        }
        return tokens;
    }

    std::vector<uint32_t> word;
    auto flush = [&]() {
        size_t lo = 0, hi = word.size();
        while (lo < hi && is_joiner_cp(word[lo])) ++lo;
        while (hi > lo && is_joiner_cp(word[hi - 1])) --hi;
        if (lo < hi) {
            std::string t;
            for (size_t i = lo; i < hi; ++i) encode_utf8(word[i], t);
            tokens.push_back(std::move(t));
        }
        word.clear();
    };
    for (uint32_t cp : cps) {
        if (is_space_cp(cp)) {
            flush();
        } else if (!is_punct_cp(cp)) {
            word.push_back(cp);
        }
    }
    flush();
    return tokens;
}

Vocabulary::Vocabulary(Granularity granularity, std::vector<std::string> tokens_by_index)
    : granularity_(granularity), tokens_(std::move(tokens_by_index)) {
    if (tokens_.size() < 2 || tokens_[0] != "<pad>" || tokens_[1] != "<unk>")
        throw std::invalid_argument("Vocabulary: indices 0 and 1 must be <pad> and <unk>");
    for (size_t i = 0; i < tokens_.size(); ++i)
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
            throw std::invalid_argument("Vocabulary: duplicate token '" + tokens_[i] + "'");
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             size_t min_count,
                             size_t max_size,
                             Granularity granularity) {
    if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
    if (max_size < 2) throw std::invalid_argument("build_vocab: max_size must be >= 2");

    std::unordered_map<std::string, size_t> freq;
    for (const auto& doc : corpus)
        for (const auto& tok : doc) ++freq[tok];

    std::vector<std::pair<std::string, size_t>> entries;
    entries.reserve(freq.size());
    for (auto& [tok, count] : freq)
        if (count >= min_count) entries.emplace_back(tok, count);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (entries.size() > max_size - 2) entries.resize(max_size - 2);

    std::vector<std::string> tokens{"<pad>", "<unk>"};
    tokens.reserve(entries.size() + 2);
    for (auto& [tok, _] : entries) tokens.push_back(tok);
    return Vocabulary(granularity, std::move(tokens));
}

int Vocabulary::lookup(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

namespace {

std::string escape_token(const std::string& t) {
    std::string out;
    for (char c : t) {
        if (c == '\\') out += "\\\\";
        else if (c == '\t') out += "\\t";
        else if (c == '\n') out += "\\n";
        else out.push_back(c);
    }
    return out;
}

std::string unescape_token(const std::string& t) {
    std::string out;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] == '\\' && i + 1 < t.size()) {
            char next = t[i + 1];
            if (next == 't') { out.push_back('\t'); ++i; continue; }
            if (next == 'n') { out.push_back('\n'); ++i; continue; }
            if (next == '\\') { out.push_back('\\'); ++i; continue; }
        }
        out.push_back(t[i]);
    }
    return out;
}

} // namespace

std::string Vocabulary::to_string() const {
    std::string out = "# granularity=" + murreid::to_string(granularity_) + "\n";
    for (size_t i = 0; i < tokens_.size(); ++i)
        out += escape_token(tokens_[i]) + "\t" + std::to_string(i) + "\n";
    return out;
}

Vocabulary Vocabulary::parse(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("vocabulary file is empty");
    if (line.rfind("# granularity=", 0) != 0)
        throw std::runtime_error("vocabulary file missing '# granularity=' header");
    Granularity g = granularity_from_string(line.substr(14));
    std::vector<std::string> tokens;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t tab = line.rfind('\t');
        if (tab == std::string::npos) throw std::runtime_error("vocabulary line missing tab: " + line);
        size_t idx = std::stoul(line.substr(tab + 1));
        if (idx != tokens.size())
            throw std::runtime_error("vocabulary indices must be dense, got " + std::to_string(idx) +
                                     " at position " + std::to_string(tokens.size()));
        tokens.push_back(unescape_token(line.substr(0, tab)));
    }
    return Vocabulary(g, std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
    out << to_string();
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
    return parse(in);
}

EncodedText encode_fixed(const std::vector<std::string>& tokens, const Vocabulary& vocab, size_t L) {
    if (L < 1) throw std::invalid_argument("encode_fixed: L must be >= 1");
    EncodedText enc;
    enc.true_length = std::min(tokens.size(), L);
    enc.ids.assign(L, Vocabulary::kPad);
    for (size_t i = 0; i < enc.true_length; ++i) enc.ids[i] = vocab.lookup(tokens[i]);
    return enc;
}

std::string ngram_key(const std::vector<std::string>& tokens, size_t start, int n,
                      Granularity granularity) {
    std::string key;
    for (int j = 0; j < n; ++j) {
        if (granularity == Granularity::Word && j > 0) key += ' ';
        key += tokens[start + static_cast<size_t>(j)];
    }
    return key;
}

namespace {

std::vector<std::string> with_boundaries(const std::vector<std::string>& tokens,
                                         Granularity granularity) {
    if (granularity != Granularity::Char) return tokens;
    std::vector<std::string> seq;
    seq.reserve(tokens.size() + 2);
    seq.emplace_back("^");
    seq.insert(seq.end(), tokens.begin(), tokens.end());
    seq.emplace_back("$");
    return seq;
}

} // namespace

NgramVocab build_ngram_vocab(const std::vector<std::vector<std::string>>& corpus,
                             int n_lo,
                             int n_hi,
                             Granularity granularity,
                             bool with_idf) {
    if (n_lo < 1 || n_lo > n_hi)
        throw std::invalid_argument("build_ngram_vocab: need 1 <= n_lo <= n_hi");

    std::unordered_map<std::string, size_t> df;
    for (const auto& doc : corpus) {
        std::vector<std::string> seq = with_boundaries(doc, granularity);
        std::unordered_map<std::string, bool> seen;
        for (int n = n_lo; n <= n_hi; ++n) {
            if (seq.size() < static_cast<size_t>(n)) continue;
            for (size_t i = 0; i + static_cast<size_t>(n) <= seq.size(); ++i)
                seen[ngram_key(seq, i, n, granularity)] = true;
        }
        for (auto& [key, _] : seen) ++df[key];
    }

    std::vector<std::string> keys;
    keys.reserve(df.size());
    for (auto& [key, _] : df) keys.push_back(key);
    std::sort(keys.begin(), keys.end());

    NgramVocab vocab;
    const double n_docs = static_cast<double>(corpus.size());
    if (with_idf) vocab.idf.resize(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) {
        vocab.index.emplace(keys[i], static_cast<int>(i));
        if (with_idf)
            vocab.idf[i] = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[keys[i]]))) + 1.0;
    }
    return vocab;
}

SparseFeatures ngram_features(const std::vector<std::string>& tokens,
                              int n_lo,
                              int n_hi,
                              const NgramVocab& vocab,
                              Granularity granularity) {
    if (n_lo < 1 || n_lo > n_hi)
        throw std::invalid_argument("ngram_features: need 1 <= n_lo <= n_hi");

    SparseFeatures feats;
    feats.dimension = vocab.index.size();
    if (tokens.empty()) return feats;

    std::vector<std::string> seq = with_boundaries(tokens, granularity);
    for (int n = n_lo; n <= n_hi; ++n) {
        if (seq.size() < static_cast<size_t>(n)) continue;
        for (size_t i = 0; i + static_cast<size_t>(n) <= seq.size(); ++i) {
            auto it = vocab.index.find(ngram_key(seq, i, n, granularity));
            if (it != vocab.index.end()) feats.weights[it->second] += 1.0;
        }
    }
    if (!vocab.idf.empty())
        for (auto& [id, w] : feats.weights) w *= vocab.idf[static_cast<size_t>(id)];
    return feats;
}

} // namespace murreid
