#include "murreid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace murreid {

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          size_t n_classes) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("confusion: label vectors differ in length (" +
                                    std::to_string(truth.size()) + " vs " +
                                    std::to_string(predicted.size()) + ")");
    ConfusionMatrix cm(n_classes);
    for (size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || static_cast<size_t>(t) >= n_classes || p < 0 ||
            static_cast<size_t>(p) >= n_classes)
            throw std::invalid_argument("confusion: label outside registry at position " +
                                        std::to_string(i));
        cm.at(static_cast<size_t>(t), static_cast<size_t>(p))++;
    }
    return cm;
}

EvalReport metrics(const ConfusionMatrix& cm) {
    const size_t n = cm.n_classes;
    EvalReport rep;
    rep.precision.assign(n, 0.0);
    rep.recall.assign(n, 0.0);
    rep.f1.assign(n, 0.0);
    rep.support.assign(n, 0);

    int64_t trace = 0;
    for (size_t k = 0; k < n; ++k) {
        int64_t rowsum = 0, colsum = 0;
        for (size_t j = 0; j < n; ++j) {
            rowsum += cm.at(k, j);
            colsum += cm.at(j, k);
        }
        const int64_t tp = cm.at(k, k);
        trace += tp;
        rep.support[k] = rowsum;
        rep.precision[k] = colsum > 0 ? static_cast<double>(tp) / static_cast<double>(colsum) : 0.0;
        rep.recall[k] = rowsum > 0 ? static_cast<double>(tp) / static_cast<double>(rowsum) : 0.0;
        const double pr = rep.precision[k] + rep.recall[k];
        rep.f1[k] = pr > 0.0 ? 2.0 * rep.precision[k] * rep.recall[k] / pr : 0.0;
    }
    const int64_t total = cm.total();
    rep.accuracy = total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
    if (n > 0) {
        rep.macro_precision = std::accumulate(rep.precision.begin(), rep.precision.end(), 0.0) / n;
        rep.macro_recall = std::accumulate(rep.recall.begin(), rep.recall.end(), 0.0) / n;
        rep.macro_f1 = std::accumulate(rep.f1.begin(), rep.f1.end(), 0.0) / n;
    }
    return rep;
}

std::string round_half_even(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    double scaled = value * scale;
    double k = std::floor(scaled);
    double frac = scaled - k;
    long long unit;
    // Decide on the decimal value, not the binary one: products like
    // 0.675*100 land a hair under 67.5 in IEEE arithmetic.
    if (std::abs(frac - 0.5) <= 1e-9) {
        auto low = static_cast<long long>(k);
        unit = (low % 2 == 0) ? low : low + 1;
    } else {
        unit = static_cast<long long>(std::floor(scaled + 0.5));
    }
    char buf[64];
    double rounded = static_cast<double>(unit) / scale;
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, rounded);
    return buf;
}

namespace {

std::string format_value(double v, bool full_precision) {
    if (!full_precision) return round_half_even(v, 2);
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

} // namespace

std::string render_report(const EvalReport& report, const LabelRegistry& registry,
                          ReportStyle style, bool full_precision) {
    const size_t n = registry.size();
    auto get = [](const std::vector<double>& v, size_t k) {
        return k < v.size() ? v[k] : 0.0;
    };
    auto get_support = [&](size_t k) -> int64_t {
        return k < report.support.size() ? report.support[k] : 0;
    };

    std::string out;
    if (style == ReportStyle::Tsv) {
        out += "dialect\tprecision\trecall\tf1\tsupport\n";
        for (size_t k = 0; k < n; ++k) {
            out += registry.at(static_cast<int>(k)).code;
            out += '\t';
            out += format_value(get(report.precision, k), full_precision);
            out += '\t';
            out += format_value(get(report.recall, k), full_precision);
            out += '\t';
            out += format_value(get(report.f1, k), full_precision);
            out += '\t';
            out += std::to_string(get_support(k));
            out += '\n';
        }
        out += "# accuracy=" + format_value(report.accuracy, full_precision) + "\n";
    } else {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-8s %9s %9s %9s %9s\n", "dialect", "precision",
                      "recall", "f1", "support");
        out += buf;
        for (size_t k = 0; k < n; ++k) {
            std::snprintf(buf, sizeof(buf), "%-8s %9s %9s %9s %9lld\n",
                          registry.at(static_cast<int>(k)).code.c_str(),
                          format_value(get(report.precision, k), full_precision).c_str(),
                          format_value(get(report.recall, k), full_precision).c_str(),
                          format_value(get(report.f1, k), full_precision).c_str(),
                          static_cast<long long>(get_support(k)));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "accuracy %s\n",
                      format_value(report.accuracy, full_precision).c_str());
        out += buf;
    }
    return out;
}

} // namespace murreid
