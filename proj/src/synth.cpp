#include "qpr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qpr/error.hpp"
#include "qpr/random.hpp"

namespace qpr::synth {

namespace {

constexpr std::uint64_t kBadStreamSalt = 0xBADC0FFEEull;
constexpr std::uint64_t kArtifactStreamSalt = 0xA27F1ACull;

double beat(double phase) {
    // Distances taken on the circle so the train stays smooth across beats.
    const auto bump = [phase](double centre, double width) {
        double d = std::abs(phase - centre);
        d = std::min(d, 1.0 - d);
        return std::exp(-d * d / (2.0 * width * width));
    };
    return bump(kSystolicPhase, kSystolicWidth) + kDicroticAmplitude * bump(kDicroticPhase, kDicroticWidth);
}

GeneratedSegment pulse_train(const SynthConfig& cfg, Rng& rng, double bpm) {
    const double period = 60.0 / bpm;
    const double offset = rng.uniform(0.0, period);
    const double baseline = rng.uniform(1.5, 2.5);
    const double amplitude = rng.uniform(0.8, 1.2);

    GeneratedSegment g;
    g.bpm = bpm;
    g.samples.resize(cfg.length);
    for (std::size_t i = 0; i < cfg.length; ++i) {
        const double t = static_cast<double>(i) / cfg.fs + offset;
        const double phase = std::fmod(t, period) / period;
        const double noise = rng.uniform(-kNoiseFraction, kNoiseFraction) * amplitude;
        g.samples[i] = baseline + amplitude * beat(phase) + noise;
    }
    return g;
}

Artifact pick_artifact(const SynthConfig& cfg, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < cfg.artifact_mix.size(); ++i) {
        acc += cfg.artifact_mix[i];
        if (u < acc) return static_cast<Artifact>(i);
    }
    return Artifact::Saturation;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(Artifact a) {
    switch (a) {
        case Artifact::BaselineWander: return "baseline_wander";
        case Artifact::Burst: return "burst";
        case Artifact::Dropout: return "dropout";
        case Artifact::Saturation: return "saturation";
    }
    return "unknown";
}

void SynthConfig::validate() const {
    if (!(fs > 0.0)) throw Error("InvalidSynthConfig", "fs must be positive");
    if (!(bpm_min >= 40.0 && bpm_max <= 180.0 && bpm_min <= bpm_max)) {
        throw Error("InvalidSynthConfig", "beat rate range must lie within [40, 180] bpm");
    }
    double sum = 0.0;
    for (double p : artifact_mix) {
        if (!(p >= 0.0)) throw Error("InvalidSynthConfig", "artifact proportions must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("InvalidSynthConfig", "artifact proportions must sum to 1");
    // Dropout needs a flat run of max(100 samples, 1 s) plus room around it.
    if (length < 2 * std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(fs)))) {
        throw Error("InvalidSynthConfig", "segment length too short for the artifact models");
    }
}

GeneratedSegment gen_good_at_bpm(const SynthConfig& cfg, std::size_t k, double bpm) {
    cfg.validate();
    Rng rng = Rng::stream(cfg.seed, k);
    rng.uniform();  // keep the stream aligned with gen_good, which draws the rate first
    return pulse_train(cfg, rng, bpm);
}

GeneratedSegment gen_good(const SynthConfig& cfg, std::size_t k) {
    cfg.validate();
    Rng rng = Rng::stream(cfg.seed, k);
    const double bpm = rng.uniform(cfg.bpm_min, cfg.bpm_max);
    return pulse_train(cfg, rng, bpm);
}

GeneratedSegment gen_bad_with(const SynthConfig& cfg, std::size_t k, Artifact artifact) {
    cfg.validate();
    Rng rng = Rng::stream(cfg.seed ^ kBadStreamSalt, k);
    const double bpm = rng.uniform(cfg.bpm_min, cfg.bpm_max);
    GeneratedSegment g = pulse_train(cfg, rng, bpm);
    g.clean = g.samples;
    g.artifact = artifact;

    Rng art = Rng::stream(cfg.seed ^ kArtifactStreamSalt, k);
    auto& y = g.samples;
    const std::size_t n = y.size();
    const double base = *std::min_element(g.clean.begin(), g.clean.end());
    const double swing = *std::max_element(g.clean.begin(), g.clean.end()) - base;

    switch (artifact) {
        case Artifact::BaselineWander: {
            // Slow excursion several times the pulse height, kept non-negative.
            const double height = art.uniform(3.0, 6.0) * swing;
            const double freq = art.uniform(0.1, 0.3);
            const double phase = art.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / cfg.fs;
                y[i] += height * 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * freq * t + phase));
            }
            break;
        }
        case Artifact::Burst: {
            const auto len = static_cast<std::size_t>(art.uniform(0.3, 0.5) * static_cast<double>(n));
            const std::size_t start = art.below(n - len + 1);
            const double sigma = art.uniform(2.0, 4.0) * swing;
            for (std::size_t i = start; i < start + len; ++i) y[i] += sigma * art.normal();
            break;
        }
        case Artifact::Dropout: {
            const std::size_t min_len = std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(cfg.fs)));
            const std::size_t len = min_len + art.below(n / 2 - min_len + 1);
            const std::size_t start = art.below(n - len + 1);
            const double level = base * art.uniform(0.02, 0.1);
            std::fill(y.begin() + static_cast<std::ptrdiff_t>(start),
                      y.begin() + static_cast<std::ptrdiff_t>(start + len), level);
            break;
        }
        case Artifact::Saturation: {
            // Over-driven front end: large gain around the mean, clipped at the
            // rail; the rail sits low enough that a large share of samples clip.
            const double gain = art.uniform(3.0, 5.0);
            const double centre = mean_of(g.clean);
            for (double& v : y) v = centre + gain * (v - centre);
            std::vector<double> sorted = y;
            std::sort(sorted.begin(), sorted.end());
            const double rail = sorted[static_cast<std::size_t>(art.uniform(0.4, 0.7) * static_cast<double>(n))];
            for (double& v : y) v = std::min(v, rail);
            const double floor = *std::min_element(y.begin(), y.end());
            if (floor <= 0.0) {
                for (double& v : y) v += base - floor;
            }
            break;
        }
    }
    return g;
}

GeneratedSegment gen_bad(const SynthConfig& cfg, std::size_t k) {
    cfg.validate();
    Rng pick = Rng::stream(cfg.seed ^ kArtifactStreamSalt ^ 0x5EEDull, k);
    return gen_bad_with(cfg, k, pick_artifact(cfg, pick));
}

std::vector<ingest::SegmentRecord> generate_dataset(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<ingest::SegmentRecord> out;
    out.reserve(cfg.n_good + cfg.n_bad);
    const auto push = [&](std::vector<double> samples, ingest::Label label) {
        const std::size_t index = out.size();
        ingest::SegmentRecord r;
        r.segment_id = ingest::make_segment_id("synth", index);
        r.subject = "synth";
        r.start_index = static_cast<std::int64_t>(index * cfg.length);
        r.label = label;
        r.samples = std::move(samples);
        r.fs = cfg.fs;
        out.push_back(std::move(r));
    };
    for (std::size_t k = 0; k < cfg.n_good; ++k) push(gen_good(cfg, k).samples, ingest::Label::Good);
    for (std::size_t k = 0; k < cfg.n_bad; ++k) push(gen_bad(cfg, k).samples, ingest::Label::Bad);
    return out;
}

}  // namespace qpr::synth
