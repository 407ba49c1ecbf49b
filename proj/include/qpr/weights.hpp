#pragma once

// Named, shaped float32 parameter arrays and the "QPRW" bundle file.
//
// Layout (all integers little-endian):
//   "QPRW" | u32 version (1) | u32 array count
//   per array: u16 name length | UTF-8 name | u8 dtype (0 = float32)
//              | u8 rank | rank x u32 dims | payload, row-major float32

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qpr::cnn {

struct WeightArray {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
    bool operator==(const WeightArray&) const = default;
};

class WeightBundle {
public:
    // Throws DuplicateArray, or ShapeMismatch when values and dims disagree.
    void add(WeightArray array);
    const WeightArray& at(std::string_view name) const;  // throws MissingArray
    const WeightArray* find(std::string_view name) const;
    WeightArray* find_mutable(std::string_view name);

    const std::vector<WeightArray>& arrays() const { return arrays_; }
    std::size_t parameter_count() const;

    bool operator==(const WeightBundle&) const = default;

private:
    std::vector<WeightArray> arrays_;
};

std::vector<std::uint8_t> encode_bundle(const WeightBundle& bundle);
// Throws BadMagic, UnsupportedVersion, UnsupportedDtype, TruncatedFile (naming
// the array being read) or ShapeHeaderMismatch (bytes left after the last
// declared array, or a zero-sized dimension).
WeightBundle decode_bundle(std::span<const std::uint8_t> bytes);

void save_weights(const WeightBundle& bundle, const std::filesystem::path& path);
WeightBundle load_weights(const std::filesystem::path& path);

}  // namespace qpr::cnn
