#include "fakerair/metrics.hpp"

#include "fakerair/errors.hpp"

namespace fakerair {

BinaryCounts collapse_to_binary(const MultiCounts& m) {
    BinaryCounts b;
    for (size_t t = 0; t < kNumClasses; ++t) {
        for (size_t p = 0; p < kNumClasses; ++p) {
            const bool te = is_event(static_cast<AqiClass>(t));
            const bool pe = is_event(static_cast<AqiClass>(p));
            const int64_t n = m.c[t][p];
            if (te && pe)
                b.tp += n;
            else if (!te && pe)
                b.fp += n;
            else if (te && !pe)
                b.fn += n;
            else
                b.tn += n;
        }
    }
    return b;
}

BinaryMetrics binary_metrics(const BinaryCounts& m) {
    if (m.total() == 0) throw DataError("binary_metrics: empty confusion matrix");
    BinaryMetrics r;
    const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
    const double fn = static_cast<double>(m.fn), tn = static_cast<double>(m.tn);
    r.acc = Metric::make(tp + tn, tp + fp + fn + tn);
    r.precision = Metric::make(tp, tp + fp);
    r.recall = Metric::make(tp, tp + fn);
    r.f1 = Metric::make(2.0 * tp, 2.0 * tp + fp + fn);
    r.far = Metric::make(fp, fp + tn);
    r.csi = Metric::make(tp, tp + fp + fn);
    r.bias = Metric::make(tp + fp, tp + fn);
    return r;
}

MulticlassMetrics multiclass_metrics(const MultiCounts& m) {
    const int64_t total = m.total();
    if (total == 0) throw DataError("multiclass_metrics: empty confusion matrix");
    MulticlassMetrics r;

    int64_t diag = 0;
    for (size_t k = 0; k < kNumClasses; ++k) diag += m.c[k][k];
    r.acc = Metric::make(static_cast<double>(diag), static_cast<double>(total));
    // Single-label micro-averaging collapses to plain accuracy.
    r.f1_micro = r.acc;

    double macro_f1 = 0.0, weighted_f1 = 0.0, macro_csi = 0.0;
    for (size_t k = 0; k < kNumClasses; ++k) {
        int64_t tp = m.c[k][k], fp = 0, fn = 0, support = 0;
        for (size_t j = 0; j < kNumClasses; ++j) {
            if (j != k) {
                fp += m.c[j][k];
                fn += m.c[k][j];
            }
            support += m.c[k][j];
        }
        const double dtp = static_cast<double>(tp);
        r.f1_class[k] = Metric::make(2.0 * dtp, 2.0 * dtp + fp + fn);
        r.csi_class[k] = Metric::make(dtp, dtp + fp + fn);
        // A class absent from both truth and prediction (0/0) contributes 0
        // to the macro means; its per-class entry stays marked undefined.
        macro_f1 += r.f1_class[k].defined ? r.f1_class[k].value : 0.0;
        macro_csi += r.csi_class[k].defined ? r.csi_class[k].value : 0.0;
        weighted_f1 += (r.f1_class[k].defined ? r.f1_class[k].value : 0.0) *
                       static_cast<double>(support);
    }
    r.f1_macro = Metric{macro_f1 / static_cast<double>(kNumClasses), true};
    r.macro_csi = Metric{macro_csi / static_cast<double>(kNumClasses), true};
    r.f1_weighted = Metric{weighted_f1 / static_cast<double>(total), true};
    return r;
}

}  // namespace fakerair
