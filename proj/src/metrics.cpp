#include "qpr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qpr/error.hpp"
#include "qpr/io.hpp"

namespace qpr::metrics {

Confusion confusion(const std::vector<bool>& predicted_good, const std::vector<bool>& truly_good) {
    if (predicted_good.size() != truly_good.size()) {
        throw Error("LengthMismatch", std::to_string(predicted_good.size()) + " predictions vs " +
                                          std::to_string(truly_good.size()) + " labels");
    }
    if (truly_good.empty()) throw Error("EmptyInput", "no predictions to evaluate");
    Confusion c;
    for (std::size_t i = 0; i < truly_good.size(); ++i) {
        if (truly_good[i]) {
            (predicted_good[i] ? c.tp : c.fn)++;
        } else {
            (predicted_good[i] ? c.fp : c.tn)++;
        }
    }
    return c;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Summary summarize(const Confusion& c) {
    Summary s;
    s.se = ratio(c.tp, c.tp + c.fn);
    s.sp = ratio(c.tn, c.tn + c.fp);
    s.acc = ratio(c.tp + c.tn, c.total());
    s.ppv = ratio(c.tp, c.tp + c.fp);
    s.npv = ratio(c.tn, c.tn + c.fn);
    if (s.ppv && s.se && *s.ppv + *s.se > 0.0) s.f1 = 2.0 * *s.ppv * *s.se / (*s.ppv + *s.se);
    return s;
}

StrictSummary summary(const Confusion& c) {
    const Summary s = summarize(c);
    const auto need = [](const std::optional<double>& v, const char* what) {
        if (!v) throw Error("UndefinedStatistic", std::string("zero denominator: ") + what);
        return *v;
    };
    StrictSummary out{};
    out.se = need(s.se, "tp+fn (no positive samples)");
    out.sp = need(s.sp, "tn+fp (no negative samples)");
    out.acc = need(s.acc, "total");
    out.ppv = need(s.ppv, "tp+fp (nothing predicted positive)");
    out.npv = need(s.npv, "tn+fn (nothing predicted negative)");
    out.f1 = need(s.f1, "ppv+se");
    return out;
}

RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& truly_good) {
    if (scores.size() != truly_good.size()) {
        throw Error("LengthMismatch", std::to_string(scores.size()) + " scores vs " +
                                          std::to_string(truly_good.size()) + " labels");
    }
    const auto pos = static_cast<std::size_t>(std::count(truly_good.begin(), truly_good.end(), true));
    const std::size_t neg = truly_good.size() - pos;
    if (pos == 0 || neg == 0) throw Error("SingleClassInput", "ROC needs at least one good and one bad sample");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    // Twice the area in units of one positive x one negative; exact in integers.
    unsigned long long doubled_area = 0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        const std::size_t tp_prev = tp, fp_prev = fp;
        for (; i < order.size() && scores[order[i]] == threshold; ++i) (truly_good[order[i]] ? tp : fp)++;
        doubled_area += static_cast<unsigned long long>(fp - fp_prev) * (tp + tp_prev);
        roc.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(neg),
                              static_cast<double>(tp) / static_cast<double>(pos)});
    }
    roc.auc = static_cast<double>(doubled_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return roc;
}

std::string roc_csv(const RocCurve& roc) {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto& p : roc.points) {
        out += (std::isinf(p.threshold) ? std::string("inf") : io::format_double(p.threshold)) + ',' +
               io::format_double(p.fpr) + ',' + io::format_double(p.tpr) + '\n';
    }
    return out;
}

nlohmann::ordered_json metrics_json(const Confusion& c, const std::optional<RocCurve>& roc, double threshold) {
    const Summary s = summarize(c);
    const auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["positive_class"] = "good";
    j["threshold"] = threshold;
    j["support"] = c.total();
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["tn"] = c.tn;
    j["fn"] = c.fn;
    j["se"] = opt(s.se);
    j["sp"] = opt(s.sp);
    j["f1"] = opt(s.f1);
    j["acc"] = opt(s.acc);
    j["ppv"] = opt(s.ppv);
    j["npv"] = opt(s.npv);
    j["auc"] = roc ? nlohmann::ordered_json(roc->auc) : nlohmann::ordered_json(nullptr);
    return j;
}

}  // namespace qpr::metrics
