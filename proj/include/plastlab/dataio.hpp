#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "plastlab/errors.hpp"
#include "plastlab/matrix.hpp"
#include "plastlab/rng.hpp"

namespace plastlab {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kImageSide = 28;
constexpr std::size_t kImagePixels = kImageSide * kImageSide;

struct RawImages {
    std::size_t count = 0;
    std::vector<std::uint8_t> pixels; // count * 784, row-major
};

namespace detail {

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return bytes;
}

inline std::uint32_t read_u32_be(std::span<const char> bytes, std::size_t offset,
                                 const char* what) {
    if (offset + 4 > bytes.size())
        throw ParseError(std::string("truncated file while reading ") + what, offset);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void write_u32_be(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace detail

/// Parse a big-endian IDX image file (magic 0x00000803, 28x28 images).
inline RawImages load_idx_images(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    const std::uint32_t magic = detail::read_u32_be(bytes, 0, "magic");
    if (magic != kIdxImagesMagic)
        throw ParseError("bad image magic 0x" + std::to_string(magic) + " in " + path.string(),
                         0);
    const std::uint32_t n = detail::read_u32_be(bytes, 4, "image count");
    const std::uint32_t rows = detail::read_u32_be(bytes, 8, "row count");
    const std::uint32_t cols = detail::read_u32_be(bytes, 12, "column count");
    if (rows != kImageSide || cols != kImageSide)
        throw ParseError("expected 28x28 images, got " + std::to_string(rows) + "x" +
                         std::to_string(cols),
                         8);
    const std::size_t expected = 16 + std::size_t(n) * kImagePixels;
    if (bytes.size() != expected)
        throw ParseError("image payload size mismatch: file has " +
                         std::to_string(bytes.size()) + " bytes, header implies " +
                         std::to_string(expected),
                         std::min(bytes.size(), expected));
    RawImages out;
    out.count = n;
    out.pixels.assign(reinterpret_cast<const std::uint8_t*>(bytes.data()) + 16,
                      reinterpret_cast<const std::uint8_t*>(bytes.data()) + bytes.size());
    return out;
}

/// Parse a big-endian IDX label file (magic 0x00000801, labels in 0..9).
inline std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    const std::uint32_t magic = detail::read_u32_be(bytes, 0, "magic");
    if (magic != kIdxLabelsMagic)
        throw ParseError("bad label magic 0x" + std::to_string(magic) + " in " + path.string(),
                         0);
    const std::uint32_t n = detail::read_u32_be(bytes, 4, "label count");
    const std::size_t expected = 8 + std::size_t(n);
    if (bytes.size() != expected)
        throw ParseError("label payload size mismatch: file has " +
                         std::to_string(bytes.size()) + " bytes, header implies " +
                         std::to_string(expected),
                         std::min(bytes.size(), expected));
    std::vector<std::uint8_t> labels(reinterpret_cast<const std::uint8_t*>(bytes.data()) + 8,
                                     reinterpret_cast<const std::uint8_t*>(bytes.data()) +
                                         bytes.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] > 9)
            throw ParseError("label " + std::to_string(int(labels[i])) + " out of range", 8 + i);
    return labels;
}

inline void write_idx_images(const std::filesystem::path& path, const RawImages& images) {
    if (images.pixels.size() != images.count * kImagePixels)
        throw ShapeError("write_idx_images: pixel buffer does not match count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing", 0);
    detail::write_u32_be(out, kIdxImagesMagic);
    detail::write_u32_be(out, static_cast<std::uint32_t>(images.count));
    detail::write_u32_be(out, kImageSide);
    detail::write_u32_be(out, kImageSide);
    out.write(reinterpret_cast<const char*>(images.pixels.data()),
              static_cast<std::streamsize>(images.pixels.size()));
}

inline void write_idx_labels(const std::filesystem::path& path,
                             std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing", 0);
    detail::write_u32_be(out, kIdxLabelsMagic);
    detail::write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

/// In-memory dataset: pixel intensities scaled into [0,1], one row per image.
struct Dataset {
    Matrix images; // N x 784
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return labels.size(); }
};

inline Dataset make_dataset(const RawImages& images, std::vector<std::uint8_t> labels) {
    if (images.count != labels.size())
        throw InputError("make_dataset: " + std::to_string(images.count) + " images vs " +
                         std::to_string(labels.size()) + " labels");
    Dataset d;
    d.images.resize(images.count, kImagePixels);
    constexpr double scale = 1.0 / 255.0;
    double* out = d.images.data();
    for (std::size_t i = 0; i < images.pixels.size(); ++i)
        out[i] = static_cast<double>(images.pixels[i]) * scale;
    d.labels = std::move(labels);
    return d;
}

inline Dataset load_dataset(const std::filesystem::path& images_path,
                            const std::filesystem::path& labels_path) {
    return make_dataset(load_idx_images(images_path), load_idx_labels(labels_path));
}

/// Seeded sample without replacement; keeps the original relative order.
inline Dataset subsample_dataset(const Dataset& full, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("data.subsample: must be in (0,1]");
    if (fraction == 1.0) return full;
    const std::size_t n = full.size();
    const std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          fraction * static_cast<double>(n)));
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng rng = make_rng(seed, streams::subsample);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    Dataset out;
    out.images.resize(keep, full.images.cols());
    out.labels.resize(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto src = full.images.row(order[i]);
        std::copy(src.begin(), src.end(), out.images.row(i).begin());
        out.labels[i] = full.labels[order[i]];
    }
    return out;
}

} // namespace plastlab
