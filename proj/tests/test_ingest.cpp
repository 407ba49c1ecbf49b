#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "qpr/ingest.hpp"
#include "qpr/io.hpp"

using namespace qpr;
using oracle::thrown_code;

namespace {

std::vector<ingest::SegmentRecord> make_records(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> raw(n * 500);
    for (auto& v : raw) v = rng.uniform(0.0, 3.0);
    auto recs = ingest::segment_recording(raw, "subj", 100.0);
    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].label = i % 2 ? ingest::Label::Bad : ingest::Label::Good;
    return recs;
}

// Plain stringstream/stod reader, independent of the library's parser.
std::vector<std::vector<double>> naive_samples(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        for (int col = 0; std::getline(ls, cell, ','); ++col)
            if (col >= 4) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("windowing") {
    std::vector<double> raw(1250);
    std::iota(raw.begin(), raw.end(), 0.0);
    const auto w = ingest::window_signal(raw);
    REQUIRE(w.size() == 2);
    CHECK(w[0].start_index == 0);
    CHECK(w[1].start_index == 500);
    CHECK(w[1].samples.front() == 500.0);
    CHECK(ingest::window_signal(std::vector<double>(499, 1.0)).empty());
    CHECK(thrown_code([] { ingest::window_signal(std::vector<double>(10, 1.0), 1); }) == "InvalidWindow");

    Rng rng(1);
    std::vector<double> r(5000);
    for (auto& v : r) v = rng.normal();
    std::vector<double> joined;
    for (const auto& x : ingest::window_signal(r)) joined.insert(joined.end(), x.samples.begin(), x.samples.end());
    CHECK(joined == r);
}

TEST_CASE("amplitude normalization") {
    const std::vector<double> in{2.0, 4.0, 6.0};
    CHECK(ingest::normalize_amplitude(in) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(thrown_code([] { ingest::normalize_amplitude(std::vector<double>(500, 5.0)); }) == "ConstantSegment");
    CHECK(thrown_code([] { ingest::normalize_amplitude(std::vector<double>{1.0, NAN}); }) == "NonFiniteSample");

    Rng rng(2);
    std::vector<double> w(500);
    for (auto& v : w) v = rng.normal() * 3.0 + 1.0;
    const auto n = ingest::normalize_amplitude(w);
    CHECK(*std::min_element(n.begin(), n.end()) == 0.0);
    CHECK(*std::max_element(n.begin(), n.end()) == 1.0);
    const auto argsort = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        return idx;
    };
    CHECK(argsort(n) == argsort(w));
    CHECK(ingest::normalize_amplitude(n) == n);
}

TEST_CASE("labels and ids") {
    for (auto l : {ingest::Label::Good, ingest::Label::Bad, ingest::Label::Uncategorized, ingest::Label::NoRefBP,
                   ingest::Label::Unlabeled})
        CHECK(ingest::parse_label(ingest::to_string(l)) == l);
    CHECK(ingest::to_string(ingest::Label::NoRefBP) == "no_ref_bp");
    CHECK(thrown_code([] { ingest::parse_label("Good"); }) == "UnknownLabel");
    CHECK(ingest::make_segment_id("s1", 42) == "s1_000042");
}

TEST_CASE("segment CSV round trip") {
    const auto recs = make_records(3, 3);
    const std::string text = ingest::format_segments_csv(recs);
    CHECK(text.rfind("segment_id,subject,start_index,label,s0,s1,", 0) == 0);
    CHECK(ingest::parse_segments_csv(text) == recs);

    const auto naive = naive_samples(text);
    REQUIRE(naive.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(naive[i] == recs[i].samples);

    const auto dir = std::filesystem::temp_directory_path() / "qpr_ingest_test";
    std::filesystem::create_directories(dir);
    ingest::save_segments_csv(recs, dir / "a.csv");
    CHECK(ingest::load_segments_csv(dir / "a.csv") == recs);
    std::filesystem::remove_all(dir);
}

TEST_CASE("segment CSV errors") {
    const auto recs = make_records(2, 4);
    std::string text = ingest::format_segments_csv(recs);
    const std::string bad = text + "x,y,0,good,1,2,3,4,5,6\n";
    CHECK(thrown_code([&] { ingest::parse_segments_csv(bad); }) == "MalformedRow");
    CHECK(oracle::thrown_message([&] { ingest::parse_segments_csv(bad); }).find("line 4") != std::string::npos);

    std::string unknown = text;
    unknown.replace(unknown.find(",good,"), 6, ",great,");
    CHECK(thrown_code([&] { ingest::parse_segments_csv(unknown); }) == "UnknownLabel");

    const std::string first_row = text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n'));
    CHECK(thrown_code([&] { ingest::parse_segments_csv(text + first_row); }) == "DuplicateSegmentId");
}

TEST_CASE("raw column reader") {
    const auto dir = std::filesystem::temp_directory_path() / "qpr_raw_test";
    std::filesystem::create_directories(dir);
    io::write_file_atomic(dir / "r.csv", std::string("time,ppg\r\n0,1.5\r\n1,2.5\r\n"));
    CHECK(ingest::read_raw_column(dir / "r.csv", "ppg") == std::vector<double>{1.5, 2.5});
    CHECK(thrown_code([&] { ingest::read_raw_column(dir / "r.csv", "ecg"); }) == "MissingColumn");
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest and annotation merge") {
    auto recs = make_records(3, 5);
    for (auto& r : recs) r.label = ingest::Label::Unlabeled;
    const auto m = ingest::manifest_from_records(recs, "rec.csv", "seg.csv");
    const std::string ann_text =
        "segment_id,label,annotator,timestamp\n"
        "subj_000000,good,a,2020-01-01T00:00:00Z\n"
        "subj_000001,good,a,2020-01-01T00:00:01Z\n"
        "subj_000002,bad,a,2020-01-01T00:00:02Z\n";
    const auto merged = ingest::merge_annotations(m, ingest::parse_annotations_csv(ann_text));
    const auto pc = merged.pool_counts();
    CHECK(pc.at(ingest::Label::Good) == 2);
    CHECK(pc.at(ingest::Label::Bad) == 1);

    const auto round = ingest::manifest_from_json(nlohmann::json::parse(ingest::manifest_to_json(merged).dump()));
    REQUIRE(round.entries.size() == 3);
    CHECK(round.entries[2].label == ingest::Label::Bad);

    const auto unknown = ingest::parse_annotations_csv("segment_id,label,annotator,timestamp\nnope,good,a,t\n");
    CHECK(thrown_code([&] { ingest::merge_annotations(m, unknown); }) == "UnknownSegmentId");

    const auto conflict = ingest::parse_annotations_csv(
        "segment_id,label,annotator,timestamp\nsubj_000000,good,a,t\nsubj_000000,bad,b,t\n");
    const auto msg = oracle::thrown_message([&] { ingest::merge_annotations(m, conflict); });
    CHECK(thrown_code([&] { ingest::merge_annotations(m, conflict); }) == "ConflictingLabel");
    CHECK(msg.find("good") != std::string::npos);
    CHECK(msg.find("bad") != std::string::npos);

    const auto same = ingest::parse_annotations_csv(
        "segment_id,label,annotator,timestamp\nsubj_000000,good,a,t\nsubj_000000,good,b,t\n");
    CHECK(ingest::merge_annotations(m, same).entries[0].label == ingest::Label::Good);

    const auto held = ingest::parse_annotations_csv(
        "segment_id,label,annotator,timestamp\nsubj_000000,uncategorized,a,t\nsubj_000001,no_ref_bp,a,t\n");
    CHECK(ingest::merge_annotations(m, held).pool().empty());
}

TEST_CASE("train/test split") {
    auto recs = make_records(20, 6);
    recs[0].label = ingest::Label::Uncategorized;
    recs[1].label = ingest::Label::NoRefBP;
    const auto s = ingest::split_records(recs, 0.8, 7);
    CHECK(s.train.size() + s.test.size() == 18);
    CHECK(s.train.size() == 14);  // round(0.8 * 18)
    for (const auto& part : {s.train, s.test})
        for (const auto& r : part) CHECK(ingest::in_pool(r.label));
    const auto again = ingest::split_records(recs, 0.8, 7);
    CHECK(again.train == s.train);
    CHECK(ingest::split_records(recs, 0.8, 8).train != s.train);
    CHECK(thrown_code([&] { ingest::split_records(recs, 1.0, 7); }) == "InvalidSplit");

    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].subject = "p" + std::to_string(i % 4);
    const auto bysubj = ingest::split_records(recs, 0.5, 1, ingest::SplitMode::Subject);
    for (const auto& a : bysubj.train)
        for (const auto& b : bysubj.test) CHECK(a.subject != b.subject);
}
