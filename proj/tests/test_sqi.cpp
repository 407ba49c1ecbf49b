#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qpr/sqi.hpp"

using namespace qpr;
using oracle::thrown_code;

namespace {

struct Data {
    sqi::FeatureRows x;
    std::vector<int> y;
};

Data gaussian_blobs(std::size_t n, std::uint64_t seed, double shift) {
    Rng rng(seed);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double s = label ? shift : -shift;
        d.x.push_back({rng.normal() + s, 2.0 * rng.normal() - s, 10.0 + rng.normal()});
        d.y.push_back(label);
    }
    return d;
}

}  // namespace

TEST_CASE("moment features") {
    std::vector<double> sine(1000);
    for (std::size_t i = 0; i < sine.size(); ++i)
        sine[i] = 2.0 + std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 1000.0);
    CHECK(std::abs(sqi::sqi_features(sine).skewness) <= 1e-9);

    const std::vector<double> two{1.0, 3.0};
    CHECK(sqi::sqi_features(two).perfusion == doctest::Approx(100.0).epsilon(1e-15));

    Rng rng(21);
    std::vector<double> normal(100000);
    for (auto& v : normal) v = 10.0 + rng.normal();
    CHECK(std::abs(sqi::sqi_features(normal).kurtosis - 3.0) <= 0.1);

    CHECK(thrown_code([] { sqi::sqi_features(std::vector<double>(10, 2.0)); }) == "ZeroVariance");
    CHECK(thrown_code([] { sqi::sqi_features(std::vector<double>{-1.0, 1.0}); }) == "ZeroMean");
    CHECK(thrown_code([] { sqi::sqi_features(std::vector<double>{1.0, INFINITY}); }) == "NonFiniteSample");
}

TEST_CASE("feature invariances") {
    Rng rng(22);
    std::vector<double> y(500);
    for (auto& v : y) v = 1.0 + rng.uniform() * rng.uniform();
    const auto f = sqi::sqi_features(y);

    std::vector<double> scaled(y), affine(y);
    for (auto& v : scaled) v *= 3.7;
    for (auto& v : affine) v = 2.5 * v + 4.0;
    CHECK(std::abs(sqi::sqi_features(scaled).perfusion - f.perfusion) <= 1e-9 * f.perfusion);
    const auto fa = sqi::sqi_features(affine);
    CHECK(std::abs(fa.skewness - f.skewness) <= 1e-9);
    CHECK(std::abs(fa.kurtosis - f.kurtosis) <= 1e-9);
}

TEST_CASE("logistic gradient matches central differences") {
    const auto d = gaussian_blobs(60, 3, 0.7);
    const auto st = sqi::fit_standardization(d.x);
    sqi::FeatureRows z = d.x;
    for (auto& row : z)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - st.means[j]) / st.stds[j];
    const std::vector<double> w{0.3, -0.8, 0.1};
    const double b = 0.2;
    const auto g = sqi::logistic_gradient(z, d.y, w, b);
    REQUIRE(g.size() == 4);
    const double eps = 1e-5;
    for (std::size_t j = 0; j < 4; ++j) {
        auto wp = w, wm = w;
        double bp = b, bm = b;
        if (j < 3) {
            wp[j] += eps;
            wm[j] -= eps;
        } else {
            bp += eps;
            bm -= eps;
        }
        const double fd = (sqi::logistic_loss(z, d.y, wp, bp) - sqi::logistic_loss(z, d.y, wm, bm)) / (2.0 * eps);
        CHECK(std::abs(fd - g[j]) <= 1e-6);
    }
}

TEST_CASE("training separates separable data and is order free") {
    sqi::FeatureRows x;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        x.push_back({static_cast<double>(i)});
        y.push_back(i >= 20);
    }
    const auto m = sqi::train_linear_baseline(x, y, {});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK((sqi::predict_linear(m, x[i]) >= 0.5) == (y[i] == 1));

    const auto d = gaussian_blobs(80, 4, 1.0);
    const auto m1 = sqi::train_linear_baseline(d.x, d.y, {500, 0.1, 9});
    std::vector<std::size_t> perm(d.x.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng(5).shuffle(perm);
    sqi::FeatureRows xs;
    std::vector<int> ys;
    for (auto p : perm) {
        xs.push_back(d.x[p]);
        ys.push_back(d.y[p]);
    }
    const auto m2 = sqi::train_linear_baseline(xs, ys, {500, 0.1, 9});
    CHECK(m1.weights == m2.weights);
    CHECK(m1.bias == m2.bias);
    CHECK(m1.feature_means == m2.feature_means);
}

TEST_CASE("loss is non-increasing at a small learning rate") {
    const auto d = gaussian_blobs(100, 6, 0.5);
    std::vector<double> hist;
    sqi::train_linear_baseline(d.x, d.y, {300, 0.01, 1}, &hist);
    REQUIRE(hist.size() == 301);
    for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1]);
}

TEST_CASE("prediction and model file") {
    sqi::LinearModel zero{{0.0, 0.0, 0.0}, 0.0, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 0.0};
    CHECK(sqi::predict_linear(zero, std::vector<double>{1.0, 2.0, 3.0}) == 0.5);
    auto big = zero;
    big.bias = 50.0;
    CHECK(sqi::predict_linear(big, std::vector<double>{0.0, 0.0, 0.0}) > 1.0 - 1e-12);

    sqi::LinearModel m{{0.5, -1.0, 2.0}, 0.25, {1.0, 2.0, 3.0}, {2.0, 4.0, 0.5}, 0.0};
    const std::vector<double> x{3.0, 2.0, 4.0};
    const double z = 0.5 * 1.0 + -1.0 * 0.0 + 2.0 * 2.0 + 0.25;
    CHECK(std::abs(sqi::predict_linear(m, x) - 1.0 / (1.0 + std::exp(-z))) <= 1e-12);

    const auto back = sqi::model_from_json(nlohmann::json::parse(sqi::model_to_json(m).dump()));
    CHECK(back.weights == m.weights);
    CHECK(back.feature_stds == m.feature_stds);
    CHECK(thrown_code([] { sqi::model_from_json(nlohmann::json::parse("{}")); }) == "MalformedModel");

    CHECK(thrown_code([] {
              sqi::train_linear_baseline({{1.0}, {2.0}}, std::vector<int>{1, 1}, {});
          }) == "SingleClassData");
    CHECK(thrown_code([] {
              sqi::train_linear_baseline({{1.0}, {NAN}}, std::vector<int>{0, 1}, {});
          }) == "NonFiniteFeature");
}
