#include "qpr/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpr/error.hpp"
#include "qpr/random.hpp"

namespace qpr::cnn {

namespace {

std::string shape_string(const std::vector<std::uint32_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s + "]";
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error("ShapeMismatch", what);
}

void require_dims(const WeightArray& a, const std::vector<std::uint32_t>& dims) {
    require(a.dims == dims, "array '" + a.name + "' has shape " + shape_string(a.dims) + ", expected " +
                                shape_string(dims));
}

}  // namespace

Tensor3 Tensor3::from_image(const Matrix& pixels) {
    Tensor3 t(1, pixels.rows, pixels.cols);
    std::copy(pixels.data.begin(), pixels.data.end(), t.data.begin());
    return t;
}

Tensor3 conv2d(const Tensor3& x, const WeightArray& w, const WeightArray& b, std::size_t stride, std::size_t pad) {
    require(w.dims.size() == 4, "conv weight '" + w.name + "' must be rank 4");
    const std::size_t out_c = w.dims[0], in_c = w.dims[1], kh = w.dims[2], kw = w.dims[3];
    require(in_c == x.channels, "conv '" + w.name + "' expects " + std::to_string(in_c) + " input channels, got " +
                                    std::to_string(x.channels));
    require_dims(b, {static_cast<std::uint32_t>(out_c)});
    require(stride >= 1, "stride must be >= 1");
    require(x.height + 2 * pad >= kh && x.width + 2 * pad >= kw, "kernel larger than padded input");

    const std::size_t oh = (x.height + 2 * pad - kh) / stride + 1;
    const std::size_t ow = (x.width + 2 * pad - kw) / stride + 1;
    Tensor3 y(out_c, oh, ow);
    for (std::size_t o = 0; o < out_c; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = b.values[o];
                for (std::size_t i = 0; i < in_c; ++i) {
                    const float* wk = &w.values[((o * in_c + i) * kh) * kw];
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.height)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const auto ix =
                                static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(x.width)) continue;
                            acc += static_cast<double>(wk[ky * kw + kx]) *
                                   x.at(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                        }
                    }
                }
                y.at(o, oy, ox) = acc;
            }
        }
    }
    return y;
}

Tensor3 depthwise_conv2d(const Tensor3& x, const WeightArray& w, const WeightArray& b, std::size_t pad) {
    require(w.dims.size() == 4 && w.dims[0] == x.channels && w.dims[1] == 1,
            "depthwise weight '" + w.name + "' must be [" + std::to_string(x.channels) + ",1,k,k], got " +
                shape_string(w.dims));
    require_dims(b, {static_cast<std::uint32_t>(x.channels)});
    const std::size_t kh = w.dims[2], kw = w.dims[3];
    require(x.height + 2 * pad >= kh && x.width + 2 * pad >= kw, "kernel larger than padded input");
    const std::size_t oh = x.height + 2 * pad - kh + 1;
    const std::size_t ow = x.width + 2 * pad - kw + 1;

    Tensor3 y(x.channels, oh, ow);
    for (std::size_t c = 0; c < x.channels; ++c) {
        const float* wk = &w.values[c * kh * kw];
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = b.values[c];
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.height)) continue;
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(x.width)) continue;
                        acc += static_cast<double>(wk[ky * kw + kx]) *
                               x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                    }
                }
                y.at(c, oy, ox) = acc;
            }
        }
    }
    return y;
}

Tensor3 batchnorm_infer(const Tensor3& x, const WeightArray& gamma, const WeightArray& beta, const WeightArray& mean,
                        const WeightArray& var, double eps) {
    const std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(x.channels)};
    for (const auto* p : {&gamma, &beta, &mean, &var}) require_dims(*p, dims);
    Tensor3 y(x.channels, x.height, x.width);
    const std::size_t plane = x.height * x.width;
    for (std::size_t c = 0; c < x.channels; ++c) {
        if (!(var.values[c] > 0.0f)) {
            throw Error("NonPositiveVar", "array '" + var.name + "' channel " + std::to_string(c) + " is not positive");
        }
        const double scale = static_cast<double>(gamma.values[c]) / std::sqrt(static_cast<double>(var.values[c]) + eps);
        const double mu = mean.values[c];
        const double shift = beta.values[c];
        for (std::size_t i = 0; i < plane; ++i) y.data[c * plane + i] = scale * (x.data[c * plane + i] - mu) + shift;
    }
    return y;
}

Tensor3 relu(Tensor3 x) {
    for (double& v : x.data) v = v > 0.0 ? v : 0.0;
    return x;
}

Tensor3 maxpool2(const Tensor3& x) {
    Tensor3 y(x.channels, x.height / 2, x.width / 2);
    for (std::size_t c = 0; c < y.channels; ++c) {
        for (std::size_t oy = 0; oy < y.height; ++oy) {
            for (std::size_t ox = 0; ox < y.width; ++ox) {
                y.at(c, oy, ox) = std::max({x.at(c, 2 * oy, 2 * ox), x.at(c, 2 * oy, 2 * ox + 1),
                                            x.at(c, 2 * oy + 1, 2 * ox), x.at(c, 2 * oy + 1, 2 * ox + 1)});
            }
        }
    }
    return y;
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
    require(a.height == b.height && a.width == b.width, "concat needs equal spatial sizes");
    Tensor3 y(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return y;
}

Tensor3 add(const Tensor3& a, const Tensor3& b) {
    require(a.shape() == b.shape(), "add needs equal shapes");
    Tensor3 y = a;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
    return y;
}

std::vector<double> gap(const Tensor3& x) {
    std::vector<double> out(x.channels, 0.0);
    const std::size_t plane = x.height * x.width;
    for (std::size_t c = 0; c < x.channels; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += x.data[c * plane + i];
        out[c] = s / static_cast<double>(plane);
    }
    return out;
}

std::vector<double> dense(std::span<const double> x, const WeightArray& w, const WeightArray& b) {
    require(w.dims.size() == 2 && w.dims[1] == x.size(),
            "dense '" + w.name + "' expects " + (w.dims.size() == 2 ? std::to_string(w.dims[1]) : "?") +
                " inputs, got " + std::to_string(x.size()));
    require_dims(b, {w.dims[0]});
    std::vector<double> y(w.dims[0]);
    for (std::size_t o = 0; o < y.size(); ++o) {
        double acc = b.values[o];
        for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(w.values[o * x.size() + i]) * x[i];
        y[o] = acc;
    }
    return y;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor3 conv_bn(const Tensor3& x, const WeightBundle& bundle, const std::string& prefix, std::size_t pad) {
    const Tensor3 c = conv2d(x, bundle.at(prefix + ".conv.w"), bundle.at(prefix + ".conv.b"), 1, pad);
    return batchnorm_infer(c, bundle.at(prefix + ".bn.gamma"), bundle.at(prefix + ".bn.beta"),
                           bundle.at(prefix + ".bn.mean"), bundle.at(prefix + ".bn.var"));
}

Tensor3 slim_module(const Tensor3& x, const WeightBundle& bundle, const std::string& prefix) {
    const Tensor3 s = relu(conv_bn(x, bundle, prefix + ".squeeze", 0));
    const Tensor3 a = relu(conv_bn(s, bundle, prefix + ".brA", 0));

    const std::string dw = prefix + ".brB.dw";
    Tensor3 d = depthwise_conv2d(s, bundle.at(dw + ".conv.w"), bundle.at(dw + ".conv.b"), 1);
    d = relu(batchnorm_infer(d, bundle.at(dw + ".bn.gamma"), bundle.at(dw + ".bn.beta"), bundle.at(dw + ".bn.mean"),
                             bundle.at(dw + ".bn.var")));
    const Tensor3 b = relu(conv_bn(d, bundle, prefix + ".brB.pw", 0));

    const Tensor3 skip = conv_bn(x, bundle, prefix + ".skip", 0);
    return relu(add(concat_channels(a, b), skip));
}

namespace {

void push_conv_bn(std::vector<ArraySpec>& out, const std::string& prefix, std::vector<std::uint32_t> wdims) {
    const std::uint32_t channels = wdims[0];
    out.push_back({prefix + ".conv.w", std::move(wdims)});
    out.push_back({prefix + ".conv.b", {channels}});
    for (const char* p : {"gamma", "beta", "mean", "var"}) out.push_back({prefix + ".bn." + p, {channels}});
}

}  // namespace

std::vector<ArraySpec> architecture_arrays() {
    std::vector<ArraySpec> out;
    push_conv_bn(out, "stem", {kStemChannels, 1, 7, 7});
    for (std::size_t k = 0; k < kSlimModules.size(); ++k) {
        const auto& m = kSlimModules[k];
        const std::string p = "slim" + std::to_string(k + 1);
        push_conv_bn(out, p + ".squeeze", {m.squeeze, m.in, 1, 1});
        push_conv_bn(out, p + ".brA", {m.expand, m.squeeze, 1, 1});
        push_conv_bn(out, p + ".brB.dw", {m.squeeze, 1, 3, 3});
        push_conv_bn(out, p + ".brB.pw", {m.expand, m.squeeze, 1, 1});
        push_conv_bn(out, p + ".skip", {2 * m.expand, m.in, 1, 1});
    }
    const std::uint32_t features = 2 * kSlimModules.back().expand;
    out.push_back({"head.fc1.w", {kHiddenUnits, features}});
    out.push_back({"head.fc1.b", {kHiddenUnits}});
    out.push_back({"head.fc2.w", {1, kHiddenUnits}});
    out.push_back({"head.fc2.b", {1}});
    return out;
}

void validate_bundle(const WeightBundle& bundle) {
    std::vector<std::string> problems;
    for (const auto& spec : architecture_arrays()) {
        const auto* a = bundle.find(spec.name);
        if (a == nullptr) {
            problems.push_back(spec.name + ": missing");
            continue;
        }
        if (a->dims != spec.dims) {
            problems.push_back(spec.name + ": shape " + shape_string(a->dims) + ", expected " + shape_string(spec.dims));
            continue;
        }
        if (!std::all_of(a->values.begin(), a->values.end(), [](float v) { return std::isfinite(v); })) {
            problems.push_back(spec.name + ": non-finite values");
            continue;
        }
        if (spec.name.ends_with(".bn.var") &&
            !std::all_of(a->values.begin(), a->values.end(), [](float v) { return v > 0.0f; })) {
            problems.push_back(spec.name + ": non-positive variance");
        }
    }
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        throw Error("BundleShapeError", msg);
    }
}

ForwardResult forward_trace(const Matrix& pixels, const WeightBundle& bundle) {
    if (pixels.rows != kInputHeight || pixels.cols != kInputWidth) {
        throw Error("InvalidInput", "network input must be " + std::to_string(kInputHeight) + "x" +
                                        std::to_string(kInputWidth) + ", got " + std::to_string(pixels.rows) + "x" +
                                        std::to_string(pixels.cols));
    }
    for (double v : pixels.data) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error("InvalidInput", "network input values must lie in [0, 1]");
    }
    validate_bundle(bundle);

    ForwardResult r;
    Tensor3 x = Tensor3::from_image(pixels);
    r.stages.push_back({"input", x.shape()});
    x = relu(conv_bn(x, bundle, "stem", 3));
    r.stages.push_back({"stem", x.shape()});
    x = maxpool2(x);
    r.stages.push_back({"pool0", x.shape()});
    for (std::size_t k = 0; k < kSlimModules.size(); ++k) {
        const std::string name = "slim" + std::to_string(k + 1);
        x = slim_module(x, bundle, name);
        r.stages.push_back({name, x.shape()});
        if (k + 1 < kSlimModules.size()) {
            x = maxpool2(x);
            r.stages.push_back({"pool" + std::to_string(k + 1), x.shape()});
        }
    }
    const auto pooled = gap(x);
    r.stages.push_back({"gap", {pooled.size(), 1, 1}});
    auto hidden = dense(pooled, bundle.at("head.fc1.w"), bundle.at("head.fc1.b"));
    for (double& v : hidden) v = v > 0.0 ? v : 0.0;
    r.stages.push_back({"fc1", {hidden.size(), 1, 1}});
    const auto out = dense(hidden, bundle.at("head.fc2.w"), bundle.at("head.fc2.b"));
    r.stages.push_back({"fc2", {out.size(), 1, 1}});
    r.logit = out[0];
    r.probability = std::clamp(sigmoid(r.logit), std::numeric_limits<double>::denorm_min(),
                               std::nextafter(1.0, 0.0));
    return r;
}

double forward(const Matrix& pixels, const WeightBundle& bundle) { return forward_trace(pixels, bundle).probability; }

WeightBundle synthetic_bundle(std::uint64_t seed) {
    Rng rng(seed);
    WeightBundle bundle;
    for (const auto& spec : architecture_arrays()) {
        WeightArray a{spec.name, spec.dims, {}};
        const std::size_t n = a.element_count();
        a.values.resize(n);
        const auto& name = spec.name;
        const auto fill = [&](double lo, double hi) {
            for (float& v : a.values) v = static_cast<float>(rng.uniform(lo, hi));
        };
        if (name.ends_with(".w")) {
            // fan_in/fan_out of conv [out, in, kh, kw] or dense [out, in]
            const double receptive = spec.dims.size() == 4 ? static_cast<double>(spec.dims[2] * spec.dims[3]) : 1.0;
            double fan_in = spec.dims[1] * receptive;
            double fan_out = spec.dims[0] * receptive;
            if (name.find(".brB.dw.") != std::string::npos) fan_in = fan_out = receptive;
            if (name == "head.fc2.w") {
                const double bound = std::sqrt(6.0 / fan_in);
                fill(-bound, bound);
            } else {
                const double bound = std::sqrt(6.0 / (fan_in + fan_out));
                fill(-bound, bound);
            }
        } else if (name.ends_with(".conv.b") || name.starts_with("head.") || name.ends_with(".bn.beta") ||
                   name.ends_with(".bn.mean")) {
            fill(-0.1, 0.1);
        } else if (name.ends_with(".bn.gamma") || name.ends_with(".bn.var")) {
            fill(0.5, 1.5);
        }
        bundle.add(std::move(a));
    }
    return bundle;
}

WeightBundle zero_bundle() {
    WeightBundle bundle;
    for (const auto& spec : architecture_arrays()) {
        WeightArray a{spec.name, spec.dims, {}};
        const bool unit = spec.name.ends_with(".bn.gamma") || spec.name.ends_with(".bn.var");
        a.values.assign(a.element_count(), unit ? 1.0f : 0.0f);
        bundle.add(std::move(a));
    }
    return bundle;
}

}  // namespace qpr::cnn
