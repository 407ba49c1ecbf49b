#pragma once

// Synthetic PPG segments with known quality labels.
//
// Good: a periodic double-Gaussian beat (systolic peak plus a smaller
// dicrotic bump) on a positive baseline, with at most 2% uniform additive
// noise. Bad: a good segment corrupted by one artifact.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "qpr/ingest.hpp"

namespace qpr::synth {

enum class Artifact { BaselineWander, Burst, Dropout, Saturation };

std::string_view to_string(Artifact a);

struct SynthConfig {
    std::size_t n_good = 0;
    std::size_t n_bad = 0;
    double fs = 100.0;
    std::uint64_t seed = 0;
    double bpm_min = 50.0;
    double bpm_max = 110.0;
    // wander, burst, dropout, saturation
    std::array<double, 4> artifact_mix{0.25, 0.25, 0.25, 0.25};
    std::size_t length = ingest::kSegmentLength;

    // Throws InvalidSynthConfig.
    void validate() const;
};

struct GeneratedSegment {
    std::vector<double> samples;
    double bpm = 0.0;
    Artifact artifact = Artifact::BaselineWander;  // meaningful for bad segments only
    std::vector<double> clean;                     // bad segments: the uncorrupted source
};

// Beat template parameters.
inline constexpr double kSystolicPhase = 0.25;
inline constexpr double kSystolicWidth = 0.07;
inline constexpr double kDicroticPhase = 0.55;
inline constexpr double kDicroticWidth = 0.09;
inline constexpr double kDicroticAmplitude = 0.4;
inline constexpr double kNoiseFraction = 0.02;

// Deterministic in (cfg.seed, k).
GeneratedSegment gen_good(const SynthConfig& cfg, std::size_t k);
GeneratedSegment gen_good_at_bpm(const SynthConfig& cfg, std::size_t k, double bpm);
GeneratedSegment gen_bad(const SynthConfig& cfg, std::size_t k);
GeneratedSegment gen_bad_with(const SynthConfig& cfg, std::size_t k, Artifact artifact);

// n_good Good records followed by n_bad Bad records, subject "synth",
// segment ids synth_000000, synth_000001, ...
std::vector<ingest::SegmentRecord> generate_dataset(const SynthConfig& cfg);

}  // namespace qpr::synth
