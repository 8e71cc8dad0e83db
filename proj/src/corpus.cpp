#include "murreid/corpus.hpp"
#include "murreid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace murreid {

LabelRegistry::LabelRegistry(std::vector<DialectLabel> labels) : labels_(std::move(labels)) {
    for (size_t i = 0; i < labels_.size(); ++i) {
        labels_[i].index = static_cast<int>(i);
        if (!by_name_.emplace(labels_[i].name, static_cast<int>(i)).second)
            throw std::invalid_argument("duplicate dialect name: " + labels_[i].name);
        if (!by_code_.emplace(labels_[i].code, static_cast<int>(i)).second)
            throw std::invalid_argument("duplicate dialect code: " + labels_[i].code);
    }
}

const LabelRegistry& LabelRegistry::finnish() {
    static const LabelRegistry registry({
        {"Etelä-Häme", "EH", 0},
        {"Etelä-Karjala", "EK", 1},
        {"Etelä-Pohjanmaa", "EP", 2},
        {"Etelä-Satakunta", "ES", 3},
        {"Etelä-Savo", "ESa", 4},
        {"Eteläinen Keski-Suomi", "EKS", 5},
        {"Inkerinsuomalaismurteet", "IS", 6},
        {"Kaakkois-Häme", "KH", 7},
        {"Kainuu", "K", 8},
        {"Keski-Karjala", "KK", 9},
        {"Keski-Pohjanmaa", "KP", 10},
        {"Länsi-Satakunta", "LS", 11},
        {"Länsi-Uusimaa", "LU", 12},
        {"Länsipohja", "LP", 13},
        {"Läntinen Keski-Suomi", "LKS", 14},
        {"Peräpohjola", "P", 15},
        {"Pohjoinen Keski-Suomi", "PKS", 16},
        {"Pohjoinen Varsinais-Suomi", "PVS", 17},
        {"Pohjois-Häme", "PH", 18},
        {"Pohjois-Karjala", "PK", 19},
        {"Pohjois-Pohjanmaa", "PP", 20},
        {"Pohjois-Satakunta", "PS", 21},
        {"Pohjois-Savo", "PSa", 22},
    });
    return registry;
}

const DialectLabel& LabelRegistry::at(int index) const {
    if (index < 0 || static_cast<size_t>(index) >= labels_.size())
        throw std::out_of_range("dialect index out of range: " + std::to_string(index));
    return labels_[static_cast<size_t>(index)];
}

const DialectLabel* LabelRegistry::find_name(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : &labels_[static_cast<size_t>(it->second)];
}

const DialectLabel* LabelRegistry::find_code(std::string_view code) const {
    auto it = by_code_.find(std::string(code));
    return it == by_code_.end() ? nullptr : &labels_[static_cast<size_t>(it->second)];
}

const DialectLabel* LabelRegistry::resolve(std::string_view name_or_code) const {
    if (const DialectLabel* l = find_name(name_or_code)) return l;
    return find_code(name_or_code);
}

std::string to_string(Partition p) {
    switch (p) {
        case Partition::Train: return "train";
        case Partition::Val: return "val";
        case Partition::Test: return "test";
    }
    return "?";
}

std::string to_string(SplitMode m) {
    return m == SplitMode::RandomSentence ? "random-sentence" : "speaker-disjoint";
}

Partition partition_from_string(std::string_view s) {
    if (s == "train") return Partition::Train;
    if (s == "val") return Partition::Val;
    if (s == "test") return Partition::Test;
    throw std::invalid_argument("unknown partition: " + std::string(s));
}

SplitMode split_mode_from_string(std::string_view s) {
    if (s == "random-sentence") return SplitMode::RandomSentence;
    if (s == "speaker-disjoint") return SplitMode::SpeakerDisjoint;
    throw std::invalid_argument("unknown split mode: " + std::string(s));
}

std::optional<Partition> SplitManifest::find(std::string_view id) const {
    for (const auto& [uid, p] : assignment)
        if (uid == id) return p;
    return std::nullopt;
}

std::array<size_t, 3> SplitManifest::counts() const {
    std::array<size_t, 3> c{0, 0, 0};
    for (const auto& [_, p] : assignment) c[static_cast<size_t>(p)]++;
    return c;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

double parse_duration(const std::string& s, size_t line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v))
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                 ": bad duration '" + s + "'");
    }
}

int parse_rate(const std::string& s, size_t line_no) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size() || v <= 0)
            throw std::invalid_argument("not a positive integer");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                 ": bad sample rate '" + s + "'");
    }
}

} // namespace

std::vector<Utterance> parse_manifest(std::istream& in, const LabelRegistry& registry) {
    std::vector<Utterance> utts;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols = split_tabs(line);
        if (cols.size() != 7 && cols.size() != 8)
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": expected 7 or 8 tab-separated columns, got " +
                                     std::to_string(cols.size()));
        Utterance u;
        u.id = cols[0];
        u.speaker_id = cols[1];
        if (u.id.empty())
            throw std::runtime_error("manifest line " + std::to_string(line_no) + ": empty id");
        const DialectLabel* label = registry.resolve(cols[2]);
        if (label == nullptr)
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": unknown dialect '" + cols[2] + "'");
        u.dialect = *label;
        u.duration_s = parse_duration(cols[3], line_no);
        if (u.duration_s <= 0.0)
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": duration must be positive, got " + cols[3]);
        u.sample_rate_hz = parse_rate(cols[4], line_no);
        u.audio_path = cols[5];
        u.transcript_dialectal = cols[6];
        u.transcript_normalized = cols.size() == 8 ? cols[7] : std::string();
        if (!seen_ids.insert(u.id).second)
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": duplicate id '" + u.id + "'");
        utts.push_back(std::move(u));
    }
    return utts;
}

std::vector<Utterance> parse_manifest_file(const std::string& path, const LabelRegistry& registry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    return parse_manifest(in, registry);
}

namespace {

// Shortest decimal representation that round-trips; keeps serialized
// manifests byte-stable.
std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) return buf;
    }
    return buf;
}

} // namespace

std::string manifest_to_string(const std::vector<Utterance>& utts) {
    std::string out;
    for (const Utterance& u : utts) {
        out += u.id;
        out += '\t';
        out += u.speaker_id;
        out += '\t';
        out += u.dialect.name;
        out += '\t';
        out += format_double(u.duration_s);
        out += '\t';
        out += std::to_string(u.sample_rate_hz);
        out += '\t';
        out += u.audio_path;
        out += '\t';
        out += u.transcript_dialectal;
        out += '\t';
        out += u.transcript_normalized;
        out += '\n';
    }
    return out;
}

void write_manifest_file(const std::string& path, const std::vector<Utterance>& utts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << manifest_to_string(utts);
}

std::vector<Utterance> filter_by_duration(const std::vector<Utterance>& utts, double max_s) {
    if (max_s <= 0.0) throw std::invalid_argument("filter_by_duration: max_s must be positive");
    std::vector<Utterance> kept;
    kept.reserve(utts.size());
    for (const Utterance& u : utts)
        if (u.duration_s < max_s) kept.push_back(u);
    return kept;
}

namespace {

void check_ratios(const std::array<double, 3>& ratios) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split ratios must sum to 1, got " + format_double(sum));
    for (double r : ratios)
        if (r < 0.0) throw std::invalid_argument("split ratios must be nonnegative");
}

// floor(x) with a small epsilon so products like 20*0.7 that land a hair
// under an integer still cut where the exact arithmetic would.
size_t floor_cut(double x) {
    return static_cast<size_t>(std::floor(x + 1e-9));
}

} // namespace

SplitManifest split(const std::vector<Utterance>& utts,
                    std::array<double, 3> ratios,
                    uint64_t seed,
                    SplitMode mode) {
    check_ratios(ratios);
    if (utts.empty()) throw std::invalid_argument("split: empty corpus");

    const size_t n = utts.size();
    SplitManifest sm;
    sm.seed = seed;
    sm.ratios = ratios;
    sm.mode = mode;

    std::vector<Partition> part(n, Partition::Test);
    SplitMix64 rng(seed);

    if (mode == SplitMode::RandomSentence) {
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        shuffle(order, rng);
        size_t cut_train = floor_cut(static_cast<double>(n) * ratios[0]);
        size_t cut_val = floor_cut(static_cast<double>(n) * (ratios[0] + ratios[1]));
        for (size_t pos = 0; pos < n; ++pos) {
            Partition p = pos < cut_train   ? Partition::Train
                          : pos < cut_val   ? Partition::Val
                                            : Partition::Test;
            part[order[pos]] = p;
        }
    } else {
        std::vector<std::string> speakers;
        std::unordered_map<std::string, std::vector<size_t>> by_speaker;
        for (size_t i = 0; i < n; ++i) {
            auto [it, inserted] = by_speaker.try_emplace(utts[i].speaker_id);
            if (inserted) speakers.push_back(utts[i].speaker_id);
            it->second.push_back(i);
        }
        if (speakers.size() < 3)
            throw std::runtime_error("speaker-disjoint split needs at least 3 speakers, got " +
                                     std::to_string(speakers.size()));
        shuffle(speakers, rng);
        const double quota_train = static_cast<double>(n) * ratios[0];
        const double quota_val = static_cast<double>(n) * ratios[1];
        size_t spk = 0;
        double count = 0.0;
        while (spk < speakers.size() && count < quota_train) {
            for (size_t i : by_speaker[speakers[spk]]) part[i] = Partition::Train;
            count += static_cast<double>(by_speaker[speakers[spk]].size());
            ++spk;
        }
        count = 0.0;
        while (spk < speakers.size() && count < quota_val) {
            for (size_t i : by_speaker[speakers[spk]]) part[i] = Partition::Val;
            count += static_cast<double>(by_speaker[speakers[spk]].size());
            ++spk;
        }
        for (; spk < speakers.size(); ++spk)
            for (size_t i : by_speaker[speakers[spk]]) part[i] = Partition::Test;
    }

    sm.assignment.reserve(n);
    for (size_t i = 0; i < n; ++i) sm.assignment.emplace_back(utts[i].id, part[i]);
    return sm;
}

CorpusStats compute_stats(const std::vector<Utterance>& utts, const LabelRegistry& registry) {
    CorpusStats stats;
    stats.sentences.assign(registry.size(), 0);
    stats.audio_seconds.assign(registry.size(), 0.0);
    stats.speakers.assign(registry.size(), 0);
    std::vector<std::set<std::string>> speaker_sets(registry.size());
    std::set<std::string> all_speakers;
    for (const Utterance& u : utts) {
        auto k = static_cast<size_t>(u.dialect.index);
        if (k >= registry.size())
            throw std::invalid_argument("utterance dialect outside registry: " + u.dialect.name);
        stats.sentences[k]++;
        stats.audio_seconds[k] += u.duration_s;
        speaker_sets[k].insert(u.speaker_id);
        all_speakers.insert(u.speaker_id);
    }
    for (size_t k = 0; k < registry.size(); ++k)
        stats.speakers[k] = static_cast<int>(speaker_sets[k].size());
    stats.total_sentences = static_cast<int64_t>(utts.size());
    stats.total_speakers = static_cast<int>(all_speakers.size());
    return stats;
}

std::string split_to_string(const SplitManifest& sm) {
    std::string out = "# seed=" + std::to_string(sm.seed) +
                      " ratios=" + format_double(sm.ratios[0]) + "," +
                      format_double(sm.ratios[1]) + "," + format_double(sm.ratios[2]) +
                      " mode=" + to_string(sm.mode) + "\n";
    for (const auto& [id, p] : sm.assignment) {
        out += id;
        out += '\t';
        out += to_string(p);
        out += '\n';
    }
    return out;
}

SplitManifest parse_split(std::istream& in) {
    SplitManifest sm;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("split file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# seed=", 0) != 0)
        throw std::runtime_error("split file missing '# seed=...' header");
    {
        std::istringstream hdr(line.substr(2));
        std::string field;
        while (hdr >> field) {
            size_t eq = field.find('=');
            if (eq == std::string::npos) continue;
            std::string key = field.substr(0, eq);
            std::string value = field.substr(eq + 1);
            if (key == "seed") {
                sm.seed = std::stoull(value);
            } else if (key == "ratios") {
                std::istringstream rs(value);
                std::string r;
                for (int i = 0; i < 3; ++i) {
                    if (!std::getline(rs, r, ',')) throw std::runtime_error("split header: bad ratios");
                    sm.ratios[static_cast<size_t>(i)] = std::stod(r);
                }
            } else if (key == "mode") {
                sm.mode = split_mode_from_string(value);
            }
        }
    }
    size_t line_no = 1;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("split line " + std::to_string(line_no) + ": expected id<TAB>partition");
        std::string id = line.substr(0, tab);
        if (!seen.insert(id).second)
            throw std::runtime_error("split line " + std::to_string(line_no) + ": duplicate id '" + id + "'");
        sm.assignment.emplace_back(id, partition_from_string(line.substr(tab + 1)));
    }
    return sm;
}

void write_split_file(const std::string& path, const SplitManifest& sm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write split file: " + path);
    out << split_to_string(sm);
}

SplitManifest read_split_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open split file: " + path);
    return parse_split(in);
}

} // namespace murreid
