#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "murreid/corpus.hpp"

namespace murreid {

// Square count matrix, rows = true class, cols = predicted class.
struct ConfusionMatrix {
    size_t n_classes = 0;
    std::vector<int64_t> counts;  // row-major

    explicit ConfusionMatrix(size_t n = 0) : n_classes(n), counts(n * n, 0) {}
    int64_t& at(size_t t, size_t p) { return counts[t * n_classes + p]; }
    int64_t at(size_t t, size_t p) const { return counts[t * n_classes + p]; }
    int64_t total() const;
};

struct EvalReport {
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<int64_t> support;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

enum class ReportStyle { Tsv, Table };

// Counts (true, predicted) pairs; class indices must be < n_classes.
ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          size_t n_classes);

// precision_k = cm[k][k]/colsum_k, recall_k = cm[k][k]/rowsum_k,
// f1 = harmonic mean; 0/0 counts as 0. accuracy = trace/total (0 when empty).
EvalReport metrics(const ConfusionMatrix& cm);

// One row per dialect in registry order, metrics rounded to 2 decimals
// (round half to even on the decimal value), then an accuracy footer.
// full_precision switches the TSV numbers to shortest round-trip form.
std::string render_report(const EvalReport& report,
                          const LabelRegistry& registry = LabelRegistry::finnish(),
                          ReportStyle style = ReportStyle::Tsv,
                          bool full_precision = false);

// "0.675" -> "0.68": decimal round-half-to-even at the given precision.
std::string round_half_even(double value, int decimals);

} // namespace murreid
