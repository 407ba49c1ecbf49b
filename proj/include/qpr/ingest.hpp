#pragma once

// Recording ingestion: fixed-length windowing, min-max amplitude
// normalization, the segment CSV, annotation merging and train/test splits.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpr/scsa.hpp"

namespace qpr::ingest {

inline constexpr std::size_t kSegmentLength = 500;

enum class Label { Good, Bad, Uncategorized, NoRefBP, Unlabeled };

std::string_view to_string(Label label);
// Throws UnknownLabel.
Label parse_label(std::string_view text);

// Good and Bad segments form the train/test pools; everything else is held out.
inline bool in_pool(Label label) { return label == Label::Good || label == Label::Bad; }

struct SegmentRecord {
    std::string segment_id;
    std::string subject;
    std::int64_t start_index = 0;
    Label label = Label::Unlabeled;
    std::vector<double> samples;
    double fs = 100.0;

    bool operator==(const SegmentRecord&) const = default;
};

struct Window {
    std::size_t start_index = 0;
    std::vector<double> samples;
};

// floor(N / window) non-overlapping windows; the remainder is dropped.
std::vector<Window> window_signal(std::span<const double> raw, std::size_t window = kSegmentLength);

// (y - min) / (max - min). Throws ConstantSegment or NonFiniteSample.
std::vector<double> normalize_amplitude(std::span<const double> window);
scsa::Signal normalized_signal(const SegmentRecord& record);

// "<subject>_<index zero-padded to 6 digits>"
std::string make_segment_id(std::string_view subject, std::size_t index);

// Single named column of a headed CSV file holding one raw recording.
std::vector<double> read_raw_column(const std::filesystem::path& path, std::string_view column);

std::vector<SegmentRecord> segment_recording(std::span<const double> raw, std::string_view subject, double fs,
                                             std::size_t window = kSegmentLength);

// Header: segment_id,subject,start_index,label,s0,...,s499. The sampling rate
// is not part of the file; loaded records get `fs`.
std::string format_segments_csv(std::span<const SegmentRecord> records);
std::vector<SegmentRecord> parse_segments_csv(std::string_view text, double fs = 100.0);
void save_segments_csv(std::span<const SegmentRecord> records, const std::filesystem::path& path);
std::vector<SegmentRecord> load_segments_csv(const std::filesystem::path& path, double fs = 100.0);

struct ManifestEntry {
    std::string segment_id;
    std::string source;
    std::int64_t start_index = 0;
    Label label = Label::Unlabeled;
    std::string data_path;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::map<Label, std::size_t> counts() const;
    // Counts over the Good/Bad pool only.
    std::map<Label, std::size_t> pool_counts() const;
    std::vector<ManifestEntry> pool() const;
    // Throws DuplicateSegmentId.
    void validate() const;
};

DatasetManifest manifest_from_records(std::span<const SegmentRecord> records, std::string_view source,
                                      std::string_view data_path);
nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct Annotation {
    std::string segment_id;
    Label label = Label::Unlabeled;
    std::string annotator;
    std::string timestamp;  // ISO-8601 UTC
};

// Header: segment_id,label,annotator,timestamp
std::vector<Annotation> parse_annotations_csv(std::string_view text);

// Throws UnknownSegmentId, or ConflictingLabel naming every disagreeing label.
// Repeated identical labels for one segment are accepted.
DatasetManifest merge_annotations(const DatasetManifest& manifest, std::span<const Annotation> annotations);

enum class SplitMode { Random, Subject };

struct Split {
    std::vector<SegmentRecord> train;
    std::vector<SegmentRecord> test;
};

// Only pooled (Good/Bad) records are split. Random mode shuffles segments with
// the seed and takes round(fraction * n) for training; subject mode assigns
// whole subjects. Output keeps the input order within each part.
Split split_records(std::span<const SegmentRecord> records, double train_fraction, std::uint64_t seed,
                    SplitMode mode = SplitMode::Random);

}  // namespace qpr::ingest
