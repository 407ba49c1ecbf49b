#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "qpr/error.hpp"
#include "qpr/random.hpp"
#include "qpr/image.hpp"
#include "qpr/ingest.hpp"
#include "qpr/synth.hpp"

using namespace qpr;

namespace {

scsa::Signal synthetic_segment(std::uint64_t seed, std::size_t k) {
    synth::SynthConfig cfg;
    cfg.seed = seed;
    ingest::SegmentRecord r;
    r.samples = synth::gen_good(cfg, k).samples;
    return ingest::normalized_signal(r);
}

Matrix mat(std::size_t r, std::size_t c, std::vector<double> v) {
    Matrix m(r, c);
    m.data = std::move(v);
    return m;
}

double row_energy(const Matrix& m, std::size_t r) {
    double e = 0.0;
    for (double v : m.row(r)) e += v * v;
    return e;
}

}  // namespace

TEST_CASE("reconstruction error") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
    CHECK(image::reconstruction_error(a, a) == 0.0);
    CHECK(image::reconstruction_error(a, b) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(image::reconstruction_error(a, std::vector<double>{1.0}), Error);

    Rng rng(9);
    std::vector<double> y(500), z(500);
    double ss = 0.0;
    for (std::size_t i = 0; i < 500; ++i) {
        y[i] = rng.uniform();
        z[i] = rng.uniform();
        ss += (y[i] - z[i]) * (y[i] - z[i]);
    }
    CHECK(std::abs(image::reconstruction_error(y, z) - std::sqrt(ss)) <= 1e-12 * std::sqrt(ss));
}

TEST_CASE("sweep grid") {
    const auto cfg = image::SweepConfig::for_depth(20);
    CHECK(cfg.n_points == 10);
    const auto om = cfg.omegas();
    REQUIRE(om.size() == 10);
    CHECK(om.front() == 0.5);
    CHECK(om.back() == 12.0);
    CHECK(om[1] == doctest::Approx(0.5 + 11.5 / 9.0));
    image::SweepConfig bad = cfg;
    bad.omega_min = 13.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("QPR image of a synthetic pulse train") {
    const auto sig = synthetic_segment(1, 0);
    const auto cfg = image::SweepConfig::for_depth(20);
    const auto img = image::quantum_pattern_recognition(sig, cfg, "seg");
    CHECK(img.pixels.rows == 20);
    CHECK(img.pixels.cols == 500);
    const double mx = *std::max_element(img.pixels.data.begin(), img.pixels.data.end());
    CHECK(mx == 1.0);
    CHECK(*std::min_element(img.pixels.data.begin(), img.pixels.data.end()) >= 0.0);
    CHECK(row_energy(img.pixels, 0) >= row_energy(img.pixels, 19));

    // argmin over the valid candidates
    const auto cands = image::sweep_candidates(sig, cfg);
    double best = INFINITY;
    double best_h = 0.0;
    for (const auto& c : cands) {
        if (c.valid && c.error < best) {
            best = c.error;
            best_h = c.h;
        }
    }
    CHECK(img.recon_error == best);
    CHECK(img.h_selected == best_h);

    const auto again = image::quantum_pattern_recognition(sig, cfg, "seg");
    CHECK(again.pixels == img.pixels);
    CHECK(again.recon_error == img.recon_error);
}

TEST_CASE("QPR rejects signals without enough bound states") {
    const scsa::Signal zero{std::vector<double>(500, 0.0), 100.0};
    CHECK_THROWS_WITH_AS(image::quantum_pattern_recognition(zero, image::SweepConfig::for_depth(20)),
                         doctest::Contains("no h in the sweep"), Error);
    try {
        image::quantum_pattern_recognition(zero, image::SweepConfig::for_depth(20));
    } catch (const Error& e) {
        CHECK(e.code() == "NoValidCandidate");
    }
    scsa::Signal neg{std::vector<double>(500, 0.5), 100.0};
    neg.samples[3] = -0.1;
    CHECK_THROWS_AS(image::quantum_pattern_recognition(neg, image::SweepConfig::for_depth(20)), Error);
}

TEST_CASE("STFT of a pure tone peaks at the tone bin") {
    const double fs = 100.0, f0 = 12.5;
    std::vector<double> y(500);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(i) / fs);
    const auto m = image::stft_image({y, fs});
    const std::size_t nfft = image::stft_fft_length(64);
    CHECK(nfft == 64);
    CHECK(m.rows == nfft / 2 + 1);
    CHECK(m.cols == (500 - 64) / 8 + 1);
    const auto expect = static_cast<std::size_t>(std::lround(f0 * static_cast<double>(nfft) / fs));
    for (std::size_t c = 1; c + 1 < m.cols; ++c) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < m.rows; ++r)
            if (m(r, c) > m(arg, c)) arg = r;
        CHECK(arg == expect);
    }
}

TEST_CASE("STFT edge cases") {
    const auto z = image::stft_image({std::vector<double>(500, 0.0), 100.0});
    CHECK(std::all_of(z.data.begin(), z.data.end(), [](double v) { return v == 0.0; }));
    CHECK_THROWS_AS(image::stft_image({std::vector<double>(32, 1.0), 100.0}, {64, 8}), Error);
    CHECK(image::stft_fft_length(50) == 64);
}

TEST_CASE("STFT of a chirp matches a direct DFT") {
    const double fs = 100.0;
    std::vector<double> y(500);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double t = static_cast<double>(i) / fs;
        y[i] = std::cos(2.0 * std::numbers::pi * (1.0 * t + 4.0 * t * t));
    }
    const image::StftConfig cfg{50, 10};
    const auto m = image::stft_image({y, fs}, cfg);
    const std::size_t nfft = 64, frames = (500 - 50) / 10 + 1;
    Matrix ref(nfft / 2 + 1, frames);
    double mx = 0.0;
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t k = 0; k <= nfft / 2; ++k) {
            std::complex<double> acc = 0.0;
            for (std::size_t n = 0; n < cfg.window_len; ++n) {
                const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / 50.0);
                acc += w * y[f * 10 + n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / double(nfft));
            }
            ref(k, f) = std::abs(acc);
            mx = std::max(mx, ref(k, f));
        }
    }
    REQUIRE(m.rows == ref.rows);
    REQUIRE(m.cols == ref.cols);
    double worst = 0.0;
    for (std::size_t i = 0; i < m.data.size(); ++i) worst = std::max(worst, std::abs(m.data[i] - ref.data[i] / mx));
    CHECK(worst <= 1e-9);
}

TEST_CASE("grayscale rounding") {
    const Matrix m = mat(1, 4, {0.0, 1.0, 0.5, 0.25});
    const auto g = image::to_grayscale(m);
    CHECK(g == std::vector<std::uint8_t>{0, 255, 128, 64});
    Rng rng(4);
    Matrix r(10, 10);
    for (auto& v : r.data) v = rng.uniform();
    const auto gr = image::to_grayscale(r);
    for (std::size_t i = 0; i < 100; ++i) CHECK(gr[i] == static_cast<int>(std::floor(255.0 * r.data[i] + 0.5)));
    CHECK_THROWS_AS(image::to_grayscale(Matrix(1, 1, 1.5)), Error);
}

TEST_CASE("QPRI and PGM encodings") {
    const Matrix m = mat(2, 3, {0.0, 0.25, 0.5, 0.75, 1.0, 0.125});
    const auto bytes = image::encode_qpri(m);
    CHECK(bytes.size() == 16 + 6 * 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "QPRI");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 2);
    CHECK(bytes[12] == 3);
    CHECK(image::decode_qpri(bytes) == m);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(image::decode_qpri(bad), "not a QPRI image", Error);
    auto ver = bytes;
    ver[4] = 2;
    CHECK_THROWS_AS(image::decode_qpri(ver), Error);
    CHECK_THROWS_AS(image::decode_qpri(std::span(bytes).first(bytes.size() - 1)), Error);

    const auto pgm = image::encode_pgm(m);
    const std::string head = "P5\n3 2\n255\n";
    CHECK(std::string(pgm.begin(), pgm.begin() + static_cast<long>(head.size())) == head);
    CHECK(pgm.size() == head.size() + 6);
}
