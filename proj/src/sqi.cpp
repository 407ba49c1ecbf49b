#include "qpr/sqi.hpp"

#include <algorithm>
#include <cmath>

#include "qpr/error.hpp"
#include "qpr/random.hpp"

namespace qpr::sqi {

namespace {

// Sum over the sorted terms, so the result depends only on the multiset of
// terms and not on sample order.
double canonical_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

void check_finite(const FeatureRows& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (double v : x[i]) {
            if (!std::isfinite(v)) throw Error("NonFiniteFeature", "row " + std::to_string(i) + " is not finite");
        }
    }
}

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

SqiFeatures sqi_features(std::span<const double> raw, std::string segment_id) {
    if (raw.empty()) throw Error("ZeroVariance", "empty window");
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) throw Error("NonFiniteSample", "sample " + std::to_string(i) + " is not finite");
    }
    const double n = static_cast<double>(raw.size());
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : raw) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw Error("ZeroVariance", "window has zero variance");
    if (!(mean > 0.0)) throw Error("ZeroMean", "perfusion needs a positive window mean");

    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    SqiFeatures f;
    f.segment_id = std::move(segment_id);
    f.skewness = m3 / std::pow(m2, 1.5);
    f.kurtosis = m4 / (m2 * m2);
    f.perfusion = 100.0 * (*hi - *lo) / mean;
    return f;
}

Standardization fit_standardization(const FeatureRows& x) {
    if (x.empty()) throw Error("SingleClassData", "no training rows");
    const std::size_t d = x.front().size();
    const double n = static_cast<double>(x.size());
    Standardization s{std::vector<double>(d), std::vector<double>(d)};
    std::vector<double> terms(x.size());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < x.size(); ++i) terms[i] = x[i][j];
        s.means[j] = canonical_sum(terms) / n;
        for (std::size_t i = 0; i < x.size(); ++i) terms[i] = (x[i][j] - s.means[j]) * (x[i][j] - s.means[j]);
        const double sd = std::sqrt(canonical_sum(terms) / n);
        // A constant feature carries no information; unit scale keeps it inert.
        s.stds[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

double logistic_loss(const FeatureRows& z, std::span<const int> labels, std::span<const double> w, double b) {
    std::vector<double> terms(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        double s = b;
        for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * z[i][j];
        // log(1 + exp(s)) - y s, written to avoid overflow
        const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
        terms[i] = softplus - static_cast<double>(labels[i]) * s;
    }
    return canonical_sum(terms) / static_cast<double>(z.size());
}

std::vector<double> logistic_gradient(const FeatureRows& z, std::span<const int> labels, std::span<const double> w,
                                      double b) {
    const std::size_t n = z.size();
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b;
        for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * z[i][j];
        residual[i] = sigmoid(s) - static_cast<double>(labels[i]);
    }
    std::vector<double> grad(w.size() + 1);
    std::vector<double> terms(n);
    for (std::size_t j = 0; j < w.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) terms[i] = residual[i] * z[i][j];
        grad[j] = canonical_sum(terms) / static_cast<double>(n);
    }
    terms = residual;
    grad[w.size()] = canonical_sum(terms) / static_cast<double>(n);
    return grad;
}

LinearModel train_linear_baseline(const FeatureRows& x, std::span<const int> labels, const TrainOptions& opts,
                                  std::vector<double>* loss_history) {
    if (x.size() != labels.size()) throw Error("LengthMismatch", "feature rows and labels differ in length");
    check_finite(x);
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    const auto negatives = std::count(labels.begin(), labels.end(), 0);
    if (positives == 0 || negatives == 0 || positives + negatives != static_cast<long>(labels.size())) {
        throw Error("SingleClassData", "training needs at least one good and one bad sample (labels 0/1)");
    }

    const auto stdz = fit_standardization(x);
    const std::size_t d = stdz.means.size();
    FeatureRows z(x.size(), std::vector<double>(d));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) z[i][j] = (x[i][j] - stdz.means[j]) / stdz.stds[j];
    }

    Rng rng(opts.seed);
    LinearModel m;
    m.weights.resize(d);
    for (double& w : m.weights) w = 0.01 * rng.normal();
    m.bias = 0.0;
    m.feature_means = stdz.means;
    m.feature_stds = stdz.stds;

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        if (loss_history) loss_history->push_back(logistic_loss(z, labels, m.weights, m.bias));
        const auto g = logistic_gradient(z, labels, m.weights, m.bias);
        for (std::size_t j = 0; j < d; ++j) m.weights[j] -= opts.lr * g[j];
        m.bias -= opts.lr * g[d];
    }
    m.final_loss = logistic_loss(z, labels, m.weights, m.bias);
    if (loss_history) loss_history->push_back(m.final_loss);
    return m;
}

double predict_linear(const LinearModel& model, std::span<const double> features) {
    if (features.size() != model.dims()) {
        throw Error("LengthMismatch", "model expects " + std::to_string(model.dims()) + " features");
    }
    double s = model.bias;
    for (std::size_t j = 0; j < model.dims(); ++j) {
        s += model.weights[j] * (features[j] - model.feature_means[j]) / model.feature_stds[j];
    }
    return sigmoid(s);
}

nlohmann::ordered_json model_to_json(const LinearModel& model) {
    nlohmann::ordered_json j;
    j["features"] = {"skewness", "kurtosis", "perfusion"};
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["feature_means"] = model.feature_means;
    j["feature_stds"] = model.feature_stds;
    j["final_loss"] = model.final_loss;
    return j;
}

LinearModel model_from_json(const nlohmann::json& j) {
    LinearModel m;
    try {
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.feature_means = j.at("feature_means").get<std::vector<double>>();
        m.feature_stds = j.at("feature_stds").get<std::vector<double>>();
        if (j.contains("final_loss")) m.final_loss = j.at("final_loss").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedModel", e.what());
    }
    if (m.feature_means.size() != m.dims() || m.feature_stds.size() != m.dims()) {
        throw Error("MalformedModel", "weight and standardization lengths differ");
    }
    for (double s : m.feature_stds) {
        if (!(s > 0.0)) throw Error("MalformedModel", "standardization stds must be positive");
    }
    return m;
}

}  // namespace qpr::sqi
