#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpr::io {

// Writes to "<path>.tmp" and renames over `path`, so readers never observe a
// partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Shortest form is not used; 17 significant digits round-trip every double.
std::string format_double(double v);

// Splits one CSV line on commas (no quoting support; none of the formats
// handled here quote fields). A trailing '\r' is stripped.
std::vector<std::string> split_csv_line(std::string_view line);

// Strict parsers: the whole field must be consumed. Throw ParseError.
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

// Little-endian primitive encoding used by the binary formats.
void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v);
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    float f32();
    std::string str(std::size_t n);

private:
    void need(std::size_t n) const;
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace qpr::io
