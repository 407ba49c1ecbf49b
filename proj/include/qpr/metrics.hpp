#pragma once

// Binary classification statistics with Good as the positive class.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpr::metrics {

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    bool operator==(const Confusion&) const = default;
};

// true = good. Throws LengthMismatch or EmptyInput.
Confusion confusion(const std::vector<bool>& predicted_good, const std::vector<bool>& truly_good);

struct Summary {
    std::optional<double> se, sp, acc, f1, ppv, npv;
};

// Statistics with a zero denominator are left empty.
Summary summarize(const Confusion& c);

// Same formulas, but throws UndefinedStatistic naming the zero denominator of
// the first statistic that cannot be computed.
struct StrictSummary {
    double se, sp, acc, f1, ppv, npv;
};
StrictSummary summary(const Confusion& c);

struct RocPoint {
    double threshold;  // +inf for the origin
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // thresholds descending, (0,0) first, (1,1) last
    double auc = 0.0;
};

// Threshold sweep over the distinct scores (ties form one step), trapezoidal
// area. Throws SingleClassInput or LengthMismatch.
RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& truly_good);

std::string roc_csv(const RocCurve& roc);

nlohmann::ordered_json metrics_json(const Confusion& c, const std::optional<RocCurve>& roc, double threshold);

}  // namespace qpr::metrics
