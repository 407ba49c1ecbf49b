#include "qpr/weights.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "qpr/error.hpp"
#include "qpr/io.hpp"

namespace qpr::cnn {

namespace {
constexpr std::uint32_t kBundleVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 0;
}  // namespace

std::size_t WeightArray::element_count() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t b) { return a * b; });
}

void WeightBundle::add(WeightArray array) {
    if (find(array.name) != nullptr) throw Error("DuplicateArray", "array '" + array.name + "' already present");
    if (array.element_count() != array.values.size()) {
        throw Error("ShapeMismatch", "array '" + array.name + "' has " + std::to_string(array.values.size()) +
                                         " values for its declared shape");
    }
    arrays_.push_back(std::move(array));
}

const WeightArray* WeightBundle::find(std::string_view name) const {
    const auto it = std::find_if(arrays_.begin(), arrays_.end(), [&](const WeightArray& a) { return a.name == name; });
    return it == arrays_.end() ? nullptr : &*it;
}

WeightArray* WeightBundle::find_mutable(std::string_view name) {
    const auto it = std::find_if(arrays_.begin(), arrays_.end(), [&](const WeightArray& a) { return a.name == name; });
    return it == arrays_.end() ? nullptr : &*it;
}

const WeightArray& WeightBundle::at(std::string_view name) const {
    const auto* a = find(name);
    if (a == nullptr) throw Error("MissingArray", "bundle has no array '" + std::string(name) + "'");
    return *a;
}

std::size_t WeightBundle::parameter_count() const {
    std::size_t n = 0;
    for (const auto& a : arrays_) n += a.values.size();
    return n;
}

std::vector<std::uint8_t> encode_bundle(const WeightBundle& bundle) {
    std::vector<std::uint8_t> out;
    for (char c : std::string_view("QPRW")) out.push_back(static_cast<std::uint8_t>(c));
    io::put_u32(out, kBundleVersion);
    io::put_u32(out, static_cast<std::uint32_t>(bundle.arrays().size()));
    for (const auto& a : bundle.arrays()) {
        if (a.name.size() > 0xFFFF || a.dims.size() > 0xFF) {
            throw Error("UnserializableShape", "array '" + a.name + "' name or rank too large");
        }
        io::put_u16(out, static_cast<std::uint16_t>(a.name.size()));
        out.insert(out.end(), a.name.begin(), a.name.end());
        io::put_u8(out, kDtypeFloat32);
        io::put_u8(out, static_cast<std::uint8_t>(a.dims.size()));
        for (auto d : a.dims) io::put_u32(out, d);
        for (float v : a.values) io::put_f32(out, v);
    }
    return out;
}

WeightBundle decode_bundle(std::span<const std::uint8_t> bytes) {
    io::ByteReader in(bytes);
    if (!in.has(4) || in.str(4) != "QPRW") throw Error("BadMagic", "not a QPRW weight bundle");
    if (!in.has(8)) throw Error("TruncatedFile", "header truncated");
    const std::uint32_t version = in.u32();
    if (version != kBundleVersion) throw Error("UnsupportedVersion", "QPRW version " + std::to_string(version));
    const std::uint32_t count = in.u32();

    WeightBundle bundle;
    std::string current = "<header>";
    try {
        for (std::uint32_t k = 0; k < count; ++k) {
            current = "<array " + std::to_string(k) + ">";
            WeightArray a;
            const std::uint16_t name_len = in.u16();
            a.name = in.str(name_len);
            current = a.name;
            const std::uint8_t dtype = in.u8();
            if (dtype != kDtypeFloat32) {
                throw Error("UnsupportedDtype", "array '" + a.name + "' has dtype " + std::to_string(dtype));
            }
            const std::uint8_t rank = in.u8();
            for (std::uint8_t r = 0; r < rank; ++r) {
                const std::uint32_t d = in.u32();
                if (d == 0) throw Error("ShapeHeaderMismatch", "array '" + a.name + "' has a zero dimension");
                a.dims.push_back(d);
            }
            const std::size_t n = a.element_count();
            if (in.remaining() / 4 < n) {
                throw Error("TruncatedFile", "array '" + a.name + "' payload truncated");
            }
            a.values.resize(n);
            for (float& v : a.values) v = in.f32();
            bundle.add(std::move(a));
        }
    } catch (const Error& e) {
        if (e.code() == "TruncatedFile" && std::string_view(e.what()).find('\'') == std::string_view::npos) {
            throw Error("TruncatedFile", "array '" + current + "' truncated");
        }
        throw;
    }
    if (in.remaining() != 0) {
        throw Error("ShapeHeaderMismatch",
                    std::to_string(in.remaining()) + " bytes left after the last declared array");
    }
    return bundle;
}

void save_weights(const WeightBundle& bundle, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_bundle(bundle));
}

WeightBundle load_weights(const std::filesystem::path& path) { return decode_bundle(io::read_file(path)); }

}  // namespace qpr::cnn
