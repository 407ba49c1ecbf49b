#pragma once

// Classical signal quality indices and a logistic-regression baseline on them.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpr::sqi {

struct SqiFeatures {
    std::string segment_id;
    double skewness = 0.0;  // m3 / m2^1.5, population moments
    double kurtosis = 0.0;  // m4 / m2^2, non-excess
    double perfusion = 0.0; // 100 (max - min) / mean, percent

    std::vector<double> as_vector() const { return {skewness, kurtosis, perfusion}; }
};

inline constexpr std::size_t kFeatureCount = 3;

// Operates on the raw (pre-normalization) window. Throws ZeroVariance,
// ZeroMean or NonFiniteSample.
SqiFeatures sqi_features(std::span<const double> raw, std::string segment_id = {});

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;
    double final_loss = 0.0;

    std::size_t dims() const { return weights.size(); }
};

struct TrainOptions {
    std::size_t epochs = 2000;
    double lr = 0.1;
    std::uint64_t seed = 0;
};

// Labels are 1 = good (positive), 0 = bad.
using FeatureRows = std::vector<std::vector<double>>;

struct Standardization {
    std::vector<double> means;
    std::vector<double> stds;
};
Standardization fit_standardization(const FeatureRows& x);

// Mean binary cross-entropy of sigmoid(w.z + b) on already standardized rows,
// and its gradient (d/dw..., d/db).
double logistic_loss(const FeatureRows& z, std::span<const int> labels, std::span<const double> w, double b);
std::vector<double> logistic_gradient(const FeatureRows& z, std::span<const int> labels, std::span<const double> w,
                                      double b);

// Full-batch gradient descent from a seeded small random start. When
// loss_history is given it receives the loss before every epoch and after the
// last one. Throws SingleClassData or NonFiniteFeature.
LinearModel train_linear_baseline(const FeatureRows& x, std::span<const int> labels, const TrainOptions& opts,
                                  std::vector<double>* loss_history = nullptr);

double predict_linear(const LinearModel& model, std::span<const double> features);

nlohmann::ordered_json model_to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);

double sigmoid(double x);

}  // namespace qpr::sqi
