#pragma once

// Quantum pattern recognition: sweep the semi-classical parameter, keep the
// decomposition with the smallest reconstruction error and stack its
// Schrodinger components into an N_h x L image. Also hosts the STFT image
// used as a comparison representation, and the on-disk image formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpr/matrix.hpp"
#include "qpr/scsa.hpp"

namespace qpr::image {

struct SweepConfig {
    double omega_min = 0.5;
    double omega_max = 12.0;
    std::size_t n_components = 20;  // N_h, image height
    std::size_t n_points = 10;      // floor(N_h / 2)

    static SweepConfig for_depth(std::size_t n_components, double omega_min = 0.5, double omega_max = 12.0);

    // Throws InvalidSweepConfig.
    void validate() const;
    std::vector<double> omegas() const;
};

struct QprImage {
    Matrix pixels;  // n_components x L, values in [0, 1]
    double h_selected = 0.0;
    double recon_error = 0.0;
    std::string segment_id;
};

struct SweepCandidate {
    double omega = 0.0;
    double h = 0.0;
    bool valid = false;   // reconstruction succeeded and is not identically zero
    double error = 0.0;   // only meaningful when valid
};

// Euclidean norm of y - y_h. Throws LengthMismatch.
double reconstruction_error(std::span<const double> y, std::span<const double> y_h);

// Candidates are evaluated in omega order.
std::vector<SweepCandidate> sweep_candidates(const scsa::Signal& signal, const SweepConfig& cfg);

// Throws NoValidCandidate when no swept h yields cfg.n_components bound states.
QprImage quantum_pattern_recognition(const scsa::Signal& signal, const SweepConfig& cfg,
                                     std::string segment_id = {});

struct StftConfig {
    std::size_t window_len = 64;
    std::size_t hop = 8;
};

// Hann-windowed magnitude spectrogram, rows = bins 0..nfft/2, cols = frames,
// divided by its maximum (left untouched when the maximum is 0).
// nfft is the next power of two >= window_len. Throws WindowTooLong.
Matrix stft_image(const scsa::Signal& signal, const StftConfig& cfg = {});

std::size_t stft_fft_length(std::size_t window_len);

// 8-bit rendering, round(255 v) with halves away from zero. Throws OutOfRange.
std::vector<std::uint8_t> to_grayscale(const Matrix& pixels);

// "QPRI" raw float32 image. Values are narrowed to float on write.
std::vector<std::uint8_t> encode_qpri(const Matrix& m);
Matrix decode_qpri(std::span<const std::uint8_t> bytes);
void write_qpri(const std::filesystem::path& path, const Matrix& m);
Matrix read_qpri(const std::filesystem::path& path);

// Binary P5 greymap with maxval 255.
std::vector<std::uint8_t> encode_pgm(const Matrix& pixels);
void write_pgm(const std::filesystem::path& path, const Matrix& pixels);

nlohmann::ordered_json image_metadata(const QprImage& img, const SweepConfig& cfg);

}  // namespace qpr::image
