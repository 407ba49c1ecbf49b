#include "qpr/image.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "qpr/error.hpp"
#include "qpr/fft.hpp"
#include "qpr/io.hpp"

namespace qpr::image {

SweepConfig SweepConfig::for_depth(std::size_t n_components, double omega_min, double omega_max) {
    SweepConfig cfg;
    cfg.omega_min = omega_min;
    cfg.omega_max = omega_max;
    cfg.n_components = n_components;
    cfg.n_points = n_components / 2;
    return cfg;
}

void SweepConfig::validate() const {
    if (!(omega_min > 0.0) || !(omega_min < omega_max) || !std::isfinite(omega_max)) {
        throw Error("InvalidSweepConfig", "need 0 < omega_min < omega_max");
    }
    if (n_points < 1) throw Error("InvalidSweepConfig", "sweep needs at least one point");
    if (n_components < 1) throw Error("InvalidSweepConfig", "decomposition depth must be >= 1");
}

std::vector<double> SweepConfig::omegas() const {
    // linspace semantics: a single point sits on the upper bound.
    if (n_points == 1) return {omega_max};
    std::vector<double> out(n_points);
    const double step = (omega_max - omega_min) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) out[i] = omega_min + step * static_cast<double>(i);
    out.back() = omega_max;
    return out;
}

double reconstruction_error(std::span<const double> y, std::span<const double> y_h) {
    if (y.size() != y_h.size()) {
        throw Error("LengthMismatch", "signal length " + std::to_string(y.size()) + " vs reconstruction length " +
                                          std::to_string(y_h.size()));
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - y_h[i];
        ss += r * r;
    }
    return std::sqrt(ss);
}

namespace {

void require_non_negative(const scsa::Signal& signal) {
    signal.validate();
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (signal.samples[i] < 0.0) {
            throw Error("NegativeSample", "potential must be non-negative; sample " + std::to_string(i) + " is " +
                                              io::format_double(signal.samples[i]));
        }
    }
}

}  // namespace

std::vector<SweepCandidate> sweep_candidates(const scsa::Signal& signal, const SweepConfig& cfg) {
    cfg.validate();
    require_non_negative(signal);

    std::vector<SweepCandidate> out;
    for (double omega : cfg.omegas()) {
        SweepCandidate cand;
        cand.omega = omega;
        cand.h = 1.0 / (omega * omega);
        try {
            const auto stack = scsa::scsa_reconstruction(cand.h, signal, cfg.n_components);
            const bool nonzero = std::any_of(stack.reconstruction.begin(), stack.reconstruction.end(),
                                             [](double v) { return v != 0.0; });
            if (nonzero) {
                cand.valid = true;
                cand.error = reconstruction_error(signal.samples, stack.reconstruction);
            }
        } catch (const InsufficientSpectrum&) {
            // h too large for the requested depth
        }
        out.push_back(cand);
    }
    return out;
}

QprImage quantum_pattern_recognition(const scsa::Signal& signal, const SweepConfig& cfg, std::string segment_id) {
    const auto candidates = sweep_candidates(signal, cfg);

    const SweepCandidate* best = nullptr;
    for (const auto& c : candidates) {
        if (c.valid && (best == nullptr || c.error < best->error)) best = &c;
    }
    if (best == nullptr) {
        throw Error("NoValidCandidate", "no h in the sweep yields " + std::to_string(cfg.n_components) +
                                            " bound states" +
                                            (segment_id.empty() ? std::string() : " (segment " + segment_id + ")"));
    }

    const auto stack = scsa::scsa_reconstruction(best->h, signal, cfg.n_components);

    QprImage img;
    img.segment_id = std::move(segment_id);
    img.h_selected = best->h;
    img.recon_error = reconstruction_error(signal.samples, stack.reconstruction);
    img.pixels = stack.components;
    double peak = 0.0;
    for (double v : img.pixels.data) peak = std::max(peak, std::abs(v));
    for (double& v : img.pixels.data) v /= peak;
    return img;
}

std::size_t stft_fft_length(std::size_t window_len) { return next_power_of_two(window_len); }

Matrix stft_image(const scsa::Signal& signal, const StftConfig& cfg) {
    signal.validate();
    const std::size_t len = signal.size();
    if (cfg.window_len < 1 || cfg.window_len > len) {
        throw Error("WindowTooLong", "STFT window of " + std::to_string(cfg.window_len) +
                                         " samples does not fit a signal of " + std::to_string(len));
    }
    if (cfg.hop < 1) throw Error("InvalidHop", "STFT hop must be >= 1");

    const std::size_t nfft = stft_fft_length(cfg.window_len);
    const std::size_t bins = nfft / 2 + 1;
    const std::size_t frames = (len - cfg.window_len) / cfg.hop + 1;

    // Periodic Hann.
    std::vector<double> window(cfg.window_len);
    for (std::size_t n = 0; n < cfg.window_len; ++n) {
        window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                          static_cast<double>(cfg.window_len));
    }

    Matrix out(bins, frames);
    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t f = 0; f < frames; ++f) {
        std::fill(buf.begin(), buf.end(), std::complex<double>());
        const std::size_t start = f * cfg.hop;
        for (std::size_t n = 0; n < cfg.window_len; ++n) buf[n] = signal.samples[start + n] * window[n];
        fft_inplace(buf);
        for (std::size_t k = 0; k < bins; ++k) out(k, f) = std::abs(buf[k]);
    }

    const double peak = *std::max_element(out.data.begin(), out.data.end());
    if (peak > 0.0) {
        for (double& v : out.data) v /= peak;
    }
    return out;
}

std::vector<std::uint8_t> to_grayscale(const Matrix& pixels) {
    std::vector<std::uint8_t> out(pixels.data.size());
    for (std::size_t i = 0; i < pixels.data.size(); ++i) {
        const double v = pixels.data[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error("OutOfRange", "pixel " + std::to_string(i) + " = " + io::format_double(v) +
                                          " is outside [0, 1]");
        }
        out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v), 0L, 255L));
    }
    return out;
}

namespace {
constexpr std::uint32_t kQpriVersion = 1;
}

std::vector<std::uint8_t> encode_qpri(const Matrix& m) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + 4 * m.data.size());
    for (char c : std::string_view("QPRI")) out.push_back(static_cast<std::uint8_t>(c));
    io::put_u32(out, kQpriVersion);
    io::put_u32(out, static_cast<std::uint32_t>(m.rows));
    io::put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) io::put_f32(out, static_cast<float>(v));
    return out;
}

Matrix decode_qpri(std::span<const std::uint8_t> bytes) {
    io::ByteReader in(bytes);
    if (!in.has(4) || in.str(4) != "QPRI") throw Error("BadMagic", "not a QPRI image");
    const std::uint32_t version = in.u32();
    if (version != kQpriVersion) {
        throw Error("UnsupportedVersion", "QPRI version " + std::to_string(version));
    }
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    if (in.remaining() < 4 * count) throw Error("TruncatedFile", "QPRI payload shorter than header dims");
    if (in.remaining() > 4 * count) throw Error("ShapeHeaderMismatch", "QPRI payload longer than header dims");
    Matrix m(rows, cols);
    for (double& v : m.data) v = in.f32();
    return m;
}

void write_qpri(const std::filesystem::path& path, const Matrix& m) { io::write_file_atomic(path, encode_qpri(m)); }

Matrix read_qpri(const std::filesystem::path& path) { return decode_qpri(io::read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const Matrix& pixels) {
    const std::string header = "P5\n" + std::to_string(pixels.cols) + " " + std::to_string(pixels.rows) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto grey = to_grayscale(pixels);
    out.insert(out.end(), grey.begin(), grey.end());
    return out;
}

void write_pgm(const std::filesystem::path& path, const Matrix& pixels) {
    io::write_file_atomic(path, encode_pgm(pixels));
}

nlohmann::ordered_json image_metadata(const QprImage& img, const SweepConfig& cfg) {
    nlohmann::ordered_json j;
    j["segment_id"] = img.segment_id;
    j["h_selected"] = img.h_selected;
    j["recon_error"] = img.recon_error;
    j["omega_min"] = cfg.omega_min;
    j["omega_max"] = cfg.omega_max;
    j["n_points"] = cfg.n_points;
    j["N_h"] = cfg.n_components;
    return j;
}

}  // namespace qpr::image
