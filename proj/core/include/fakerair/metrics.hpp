#pragma once

#include <array>
#include <cstdint>

#include "fakerair/aqi.hpp"

namespace fakerair {

// 4-class confusion counts; rows = truth, cols = prediction.
struct MultiCounts {
    std::array<std::array<int64_t, kNumClasses>, kNumClasses> c{};

    void add(AqiClass truth, AqiClass pred) {
        ++c[static_cast<size_t>(truth)][static_cast<size_t>(pred)];
    }
    int64_t total() const {
        int64_t n = 0;
        for (const auto& row : c)
            for (int64_t v : row) n += v;
        return n;
    }
    MultiCounts& operator+=(const MultiCounts& o) {
        for (size_t i = 0; i < kNumClasses; ++i)
            for (size_t j = 0; j < kNumClasses; ++j) c[i][j] += o.c[i][j];
        return *this;
    }
};

struct BinaryCounts {
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    int64_t total() const { return tp + fp + fn + tn; }
    BinaryCounts& operator+=(const BinaryCounts& o) {
        tp += o.tp; fp += o.fp; fn += o.fn; tn += o.tn;
        return *this;
    }
};

// Collapses 4-class counts onto the event partition (Bad, VeryBad = event).
// Exact: binary classification of a value equals is_event of its 4-class
// label, so the collapse loses nothing.
BinaryCounts collapse_to_binary(const MultiCounts& m);

// A ratio that may be 0/0. Undefined is reported distinctly, never as 0.
struct Metric {
    double value = 0.0;
    bool defined = false;
    static Metric make(double num, double den) {
        return den == 0.0 ? Metric{0.0, false} : Metric{num / den, true};
    }
};

struct BinaryMetrics {
    Metric acc, precision, recall, f1, far, csi, bias;
};

struct MulticlassMetrics {
    Metric acc, f1_macro, f1_weighted, f1_micro, macro_csi;
    std::array<Metric, kNumClasses> f1_class;
    std::array<Metric, kNumClasses> csi_class;
};

// Standard contingency formulas:
//   precision TP/(TP+FP), recall TP/(TP+FN), F1 2TP/(2TP+FP+FN),
//   FAR FP/(FP+TN), CSI TP/(TP+FP+FN), Bias (TP+FP)/(TP+FN), Acc over all.
// Empty matrix throws DataError; 0/0 ratios come back undefined.
BinaryMetrics binary_metrics(const BinaryCounts& m);

// One-vs-rest per class; macro = unweighted mean where a class that is
// absent on both sides (0/0) contributes 0; weighted = truth-support
// weighted mean; micro = accuracy (single-label identity); macro-CSI
// analogous to macro F1. Empty matrix throws DataError.
MulticlassMetrics multiclass_metrics(const MultiCounts& m);

}  // namespace fakerair
