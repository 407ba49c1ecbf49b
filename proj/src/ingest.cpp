#include "qpr/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "qpr/error.hpp"
#include "qpr/io.hpp"
#include "qpr/random.hpp"

namespace qpr::ingest {

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Good: return "good";
        case Label::Bad: return "bad";
        case Label::Uncategorized: return "uncategorized";
        case Label::NoRefBP: return "no_ref_bp";
        case Label::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Label parse_label(std::string_view text) {
    if (text == "good") return Label::Good;
    if (text == "bad") return Label::Bad;
    if (text == "uncategorized") return Label::Uncategorized;
    if (text == "no_ref_bp") return Label::NoRefBP;
    if (text == "unlabeled") return Label::Unlabeled;
    throw Error("UnknownLabel", "unknown label '" + std::string(text) + "'");
}

std::vector<Window> window_signal(std::span<const double> raw, std::size_t window) {
    if (window < 2) throw Error("InvalidWindow", "window must be at least 2 samples");
    std::vector<Window> out;
    for (std::size_t start = 0; start + window <= raw.size(); start += window) {
        out.push_back({start, std::vector<double>(raw.begin() + start, raw.begin() + start + window)});
    }
    return out;
}

std::vector<double> normalize_amplitude(std::span<const double> window) {
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (!std::isfinite(window[i])) {
            throw Error("NonFiniteSample", "sample " + std::to_string(i) + " is not finite");
        }
    }
    if (window.empty()) throw Error("ConstantSegment", "empty window");
    const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
    const double min = *lo;
    const double range = *hi - *lo;
    if (!(range > 0.0)) throw Error("ConstantSegment", "window is constant");
    std::vector<double> out(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) out[i] = (window[i] - min) / range;
    return out;
}

scsa::Signal normalized_signal(const SegmentRecord& record) {
    return {normalize_amplitude(record.samples), record.fs};
}

std::string make_segment_id(std::string_view subject, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return std::string(subject) + "_" + buf;
}

std::vector<double> read_raw_column(const std::filesystem::path& path, std::string_view column) {
    std::istringstream in(io::read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw Error("MalformedRow", path.string() + ": empty file");
    const auto header = io::split_csv_line(line);
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) {
        throw Error("MissingColumn", path.string() + ": no column named '" + std::string(column) + "'");
    }
    const auto col = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto fields = io::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error("MalformedRow", path.string() + ":" + std::to_string(lineno) + ": expected " +
                                            std::to_string(header.size()) + " columns, got " +
                                            std::to_string(fields.size()));
        }
        out.push_back(io::parse_double(fields[col]));
    }
    return out;
}

std::vector<SegmentRecord> segment_recording(std::span<const double> raw, std::string_view subject, double fs,
                                             std::size_t window) {
    std::vector<SegmentRecord> out;
    const auto windows = window_signal(raw, window);
    for (std::size_t k = 0; k < windows.size(); ++k) {
        SegmentRecord rec;
        rec.segment_id = make_segment_id(subject, k);
        rec.subject = std::string(subject);
        rec.start_index = static_cast<std::int64_t>(windows[k].start_index);
        rec.samples = windows[k].samples;
        rec.fs = fs;
        out.push_back(std::move(rec));
    }
    return out;
}

std::string format_segments_csv(std::span<const SegmentRecord> records) {
    const std::size_t width = records.empty() ? kSegmentLength : records.front().samples.size();
    std::string out = "segment_id,subject,start_index,label";
    for (std::size_t i = 0; i < width; ++i) out += ",s" + std::to_string(i);
    out += '\n';
    for (const auto& r : records) {
        if (r.samples.size() != width) {
            throw Error("MalformedRow", "segment " + r.segment_id + " has " + std::to_string(r.samples.size()) +
                                            " samples, expected " + std::to_string(width));
        }
        out += r.segment_id + ',' + r.subject + ',' + std::to_string(r.start_index) + ',' +
               std::string(to_string(r.label));
        for (double v : r.samples) {
            out += ',';
            out += io::format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::vector<SegmentRecord> parse_segments_csv(std::string_view text, double fs) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error("MalformedRow", "line 1: missing header");
    const auto header = io::split_csv_line(line);
    if (header.size() < 6 || header[0] != "segment_id" || header[1] != "subject" || header[2] != "start_index" ||
        header[3] != "label") {
        throw Error("MalformedRow", "line 1: header must start with segment_id,subject,start_index,label");
    }
    const std::size_t width = header.size() - 4;
    for (std::size_t i = 0; i < width; ++i) {
        if (header[4 + i] != "s" + std::to_string(i)) {
            throw Error("MalformedRow", "line 1: sample column " + std::to_string(i) + " is named '" +
                                            header[4 + i] + "'");
        }
    }

    std::vector<SegmentRecord> out;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto fields = io::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error("MalformedRow", "line " + std::to_string(lineno) + ": expected " +
                                            std::to_string(header.size()) + " columns, got " +
                                            std::to_string(fields.size()));
        }
        SegmentRecord r;
        r.segment_id = fields[0];
        r.subject = fields[1];
        r.fs = fs;
        try {
            r.start_index = io::parse_int(fields[2]);
            r.label = parse_label(fields[3]);
            r.samples.reserve(width);
            for (std::size_t i = 0; i < width; ++i) r.samples.push_back(io::parse_double(fields[4 + i]));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(r.segment_id).second) {
            throw Error("DuplicateSegmentId",
                        "line " + std::to_string(lineno) + ": duplicate segment id '" + r.segment_id + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

void save_segments_csv(std::span<const SegmentRecord> records, const std::filesystem::path& path) {
    io::write_file_atomic(path, format_segments_csv(records));
}

std::vector<SegmentRecord> load_segments_csv(const std::filesystem::path& path, double fs) {
    try {
        return parse_segments_csv(io::read_text(path), fs);
    } catch (const Error& e) {
        if (e.code() == "IoError") throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::map<Label, std::size_t> DatasetManifest::counts() const {
    std::map<Label, std::size_t> out;
    for (const auto& e : entries) ++out[e.label];
    return out;
}

std::map<Label, std::size_t> DatasetManifest::pool_counts() const {
    std::map<Label, std::size_t> out{{Label::Good, 0}, {Label::Bad, 0}};
    for (const auto& e : entries) {
        if (in_pool(e.label)) ++out[e.label];
    }
    return out;
}

std::vector<ManifestEntry> DatasetManifest::pool() const {
    std::vector<ManifestEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [](const ManifestEntry& e) { return in_pool(e.label); });
    return out;
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (!seen.insert(e.segment_id).second) {
            throw Error("DuplicateSegmentId", "duplicate segment id '" + e.segment_id + "' in manifest");
        }
    }
}

DatasetManifest manifest_from_records(std::span<const SegmentRecord> records, std::string_view source,
                                      std::string_view data_path) {
    DatasetManifest m;
    for (const auto& r : records) {
        m.entries.push_back({r.segment_id, std::string(source), r.start_index, r.label, std::string(data_path)});
    }
    m.validate();
    return m;
}

nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::ordered_json j;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::ordered_json row;
        row["segment_id"] = e.segment_id;
        row["source"] = e.source;
        row["start_index"] = e.start_index;
        row["label"] = std::string(to_string(e.label));
        row["data_path"] = e.data_path;
        j["entries"].push_back(std::move(row));
    }
    nlohmann::ordered_json counts;
    for (Label l : {Label::Good, Label::Bad, Label::Uncategorized, Label::NoRefBP, Label::Unlabeled}) {
        const auto all = manifest.counts();
        const auto it = all.find(l);
        counts[std::string(to_string(l))] = it == all.end() ? 0 : it->second;
    }
    j["counts"] = std::move(counts);
    return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        for (const auto& row : j.at("entries")) {
            m.entries.push_back({row.at("segment_id").get<std::string>(), row.at("source").get<std::string>(),
                                 row.at("start_index").get<std::int64_t>(),
                                 parse_label(row.at("label").get<std::string>()),
                                 row.at("data_path").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedManifest", e.what());
    }
    m.validate();
    if (j.contains("counts")) {
        const auto counts = m.counts();
        for (const auto& [name, value] : j.at("counts").items()) {
            const auto it = counts.find(parse_label(name));
            const std::size_t actual = it == counts.end() ? 0 : it->second;
            if (value.get<std::size_t>() != actual) {
                throw Error("MalformedManifest", "count for '" + name + "' does not match entries");
            }
        }
    }
    return m;
}

std::vector<Annotation> parse_annotations_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error("MalformedRow", "line 1: missing header");
    const auto header = io::split_csv_line(line);
    if (header != std::vector<std::string>{"segment_id", "label", "annotator", "timestamp"}) {
        throw Error("MalformedRow", "line 1: header must be segment_id,label,annotator,timestamp");
    }
    std::vector<Annotation> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != 4) {
            throw Error("MalformedRow",
                        "line " + std::to_string(lineno) + ": expected 4 columns, got " + std::to_string(f.size()));
        }
        try {
            out.push_back({f[0], parse_label(f[1]), f[2], f[3]});
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

DatasetManifest merge_annotations(const DatasetManifest& manifest, std::span<const Annotation> annotations) {
    manifest.validate();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) index[manifest.entries[i].segment_id] = i;

    std::map<std::string, std::vector<Label>> assigned;
    for (const auto& a : annotations) {
        if (!index.contains(a.segment_id)) {
            throw Error("UnknownSegmentId", "annotation for unknown segment '" + a.segment_id + "'");
        }
        auto& labels = assigned[a.segment_id];
        if (std::find(labels.begin(), labels.end(), a.label) == labels.end()) labels.push_back(a.label);
    }

    std::string conflicts;
    for (const auto& [id, labels] : assigned) {
        if (labels.size() > 1) {
            if (!conflicts.empty()) conflicts += "; ";
            conflicts += id + ":";
            for (std::size_t i = 0; i < labels.size(); ++i) {
                conflicts += (i ? "|" : "") + std::string(to_string(labels[i]));
            }
        }
    }
    if (!conflicts.empty()) throw Error("ConflictingLabel", "conflicting labels " + conflicts);

    DatasetManifest out = manifest;
    for (const auto& [id, labels] : assigned) out.entries[index.at(id)].label = labels.front();
    return out;
}

Split split_records(std::span<const SegmentRecord> records, double train_fraction, std::uint64_t seed,
                    SplitMode mode) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("InvalidSplit", "train fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (in_pool(records[i].label)) pool.push_back(i);
    }
    Rng rng(seed);
    std::vector<bool> to_train(records.size(), false);

    if (mode == SplitMode::Random) {
        rng.shuffle(pool);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(pool.size())));
        for (std::size_t k = 0; k < n_train; ++k) to_train[pool[k]] = true;
    } else {
        std::map<std::string, std::vector<std::size_t>> by_subject;
        for (std::size_t i : pool) by_subject[records[i].subject].push_back(i);
        std::vector<std::string> subjects;
        for (const auto& [s, _] : by_subject) subjects.push_back(s);
        rng.shuffle(subjects);
        const double target = train_fraction * static_cast<double>(pool.size());
        std::size_t taken = 0;
        for (const auto& s : subjects) {
            if (static_cast<double>(taken) >= target) break;
            for (std::size_t i : by_subject[s]) to_train[i] = true;
            taken += by_subject[s].size();
        }
    }

    std::sort(pool.begin(), pool.end());
    Split split;
    for (std::size_t i : pool) (to_train[i] ? split.train : split.test).push_back(records[i]);
    return split;
}

}  // namespace qpr::ingest
