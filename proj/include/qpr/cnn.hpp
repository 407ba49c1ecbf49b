#pragma once

// Forward-pass inference for the slim CNN that scores QPR images.
//
//   1x20x500 -> conv7x7(16, pad 3)+BN+ReLU -> maxpool -> 16x10x250
//   -> slim1 (squeeze 16, expand 24) -> 48x10x250 -> maxpool -> 48x5x125
//   -> slim2 (squeeze 24, expand 36) -> 72x5x125  -> maxpool -> 72x2x62
//   -> slim3 (squeeze 36, expand 48) -> 96x2x62   -> GAP -> 96
//   -> dense 64 + ReLU -> (dropout: identity) -> dense 1 -> sigmoid
//
// A slim module is
//   s = ReLU(BN(conv1x1(x)))                                   squeeze
//   a = ReLU(BN(conv1x1(s)))                                   branch A
//   b = ReLU(BN(conv1x1(ReLU(BN(depthwise3x3(s))))))           branch B
//   out = ReLU(concat(a, b) + BN(conv1x1(x)))                  projected skip

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qpr/matrix.hpp"
#include "qpr/weights.hpp"

namespace qpr::cnn {

struct Tensor3 {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;  // channel-major, then row-major

    Tensor3() = default;
    Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
    double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
    std::array<std::size_t, 3> shape() const { return {channels, height, width}; }

    static Tensor3 from_image(const Matrix& pixels);
};

inline constexpr double kBatchNormEps = 1e-5;

// Cross-correlation, weights [out, in, k, k], bias [out].
Tensor3 conv2d(const Tensor3& x, const WeightArray& w, const WeightArray& b, std::size_t stride, std::size_t pad);
// One k x k filter per channel, weights [C, 1, k, k], bias [C], stride 1.
Tensor3 depthwise_conv2d(const Tensor3& x, const WeightArray& w, const WeightArray& b, std::size_t pad);
Tensor3 batchnorm_infer(const Tensor3& x, const WeightArray& gamma, const WeightArray& beta, const WeightArray& mean,
                        const WeightArray& var, double eps = kBatchNormEps);
Tensor3 relu(Tensor3 x);
// 2x2 window, stride 2; odd trailing rows/columns are dropped.
Tensor3 maxpool2(const Tensor3& x);
Tensor3 concat_channels(const Tensor3& a, const Tensor3& b);
Tensor3 add(const Tensor3& a, const Tensor3& b);
std::vector<double> gap(const Tensor3& x);
// Weights [out, in], bias [out].
std::vector<double> dense(std::span<const double> x, const WeightArray& w, const WeightArray& b);
double sigmoid(double x);

// conv (+bias) -> BN, reading "<prefix>.conv.{w,b}" and "<prefix>.bn.*".
Tensor3 conv_bn(const Tensor3& x, const WeightBundle& bundle, const std::string& prefix, std::size_t pad);
Tensor3 slim_module(const Tensor3& x, const WeightBundle& bundle, const std::string& prefix);

struct ArraySpec {
    std::string name;
    std::vector<std::uint32_t> dims;
};

struct SlimSpec {
    std::uint32_t in, squeeze, expand;
};

inline constexpr std::size_t kInputHeight = 20;
inline constexpr std::size_t kInputWidth = 500;
inline constexpr std::uint32_t kStemChannels = 16;
inline constexpr std::array<SlimSpec, 3> kSlimModules{{{16, 16, 24}, {48, 24, 36}, {72, 36, 48}}};
inline constexpr std::uint32_t kHiddenUnits = 64;

// Every array the architecture reads, in canonical bundle order.
std::vector<ArraySpec> architecture_arrays();

// Throws BundleShapeError listing every missing, misshapen, non-finite or
// non-positive-variance array.
void validate_bundle(const WeightBundle& bundle);

struct StageShape {
    std::string stage;
    std::array<std::size_t, 3> shape;
};

struct ForwardResult {
    double logit = 0.0;
    double probability = 0.5;
    std::vector<StageShape> stages;
};

// Input must be kInputHeight x kInputWidth with values in [0, 1] (throws
// InvalidInput). The bundle is validated first. The probability is kept
// strictly inside (0, 1).
ForwardResult forward_trace(const Matrix& pixels, const WeightBundle& bundle);
double forward(const Matrix& pixels, const WeightBundle& bundle);

// Seeded bundle with Xavier-uniform convolution/dense weights, Kaiming-uniform
// last dense layer and randomized BN statistics. Used as a fixture where no
// trained bundle is available.
WeightBundle synthetic_bundle(std::uint64_t seed);

// All architecture arrays filled with zeros except BN gamma/var (set to 1).
WeightBundle zero_bundle();

}  // namespace qpr::cnn
