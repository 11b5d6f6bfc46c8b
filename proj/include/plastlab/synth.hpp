#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "plastlab/dataio.hpp"
#include "plastlab/rng.hpp"

namespace plastlab {

/// Deterministic generator for a handwritten-digit-like corpus in the MNIST
/// IDX layout. Each class is a fixed arrangement of soft strokes; samples
/// vary by translation, gain and pixel noise. Useful for offline smoke runs
/// and benchmarks when the real MNIST files are not on disk.
struct SynthSpec {
    std::size_t samples = 60000;
    std::uint64_t seed = 1337;
};

struct SynthCorpus {
    RawImages images;
    std::vector<std::uint8_t> labels;
};

inline SynthCorpus generate_synthetic_digits(const SynthSpec& spec) {
    constexpr std::size_t side = kImageSide;
    constexpr int n_classes = 10;
    constexpr int bumps_per_class = 5;
    constexpr int max_shift = 2;

    Rng proto_rng = make_rng(spec.seed, streams::synth, 0);
    struct Bump {
        double cx, cy, sigma, amp;
    };
    std::vector<std::vector<Bump>> prototypes(n_classes);
    std::uniform_real_distribution<double> pos(7.0, 21.0);
    std::uniform_real_distribution<double> width(1.5, 2.6);
    std::uniform_real_distribution<double> amp(0.7, 1.0);
    for (auto& bumps : prototypes)
        for (int b = 0; b < bumps_per_class; ++b)
            bumps.push_back({pos(proto_rng), pos(proto_rng), width(proto_rng), amp(proto_rng)});

    // Render each prototype once at full resolution.
    std::vector<std::vector<double>> base(n_classes, std::vector<double>(side * side, 0.0));
    for (int c = 0; c < n_classes; ++c)
        for (std::size_t y = 0; y < side; ++y)
            for (std::size_t x = 0; x < side; ++x) {
                double v = 0.0;
                for (const Bump& b : prototypes[c]) {
                    const double dx = static_cast<double>(x) - b.cx;
                    const double dy = static_cast<double>(y) - b.cy;
                    v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
                }
                base[c][y * side + x] = std::min(1.0, v);
            }

    SynthCorpus out;
    out.images.count = spec.samples;
    out.images.pixels.resize(spec.samples * kImagePixels);
    out.labels.resize(spec.samples);

    Rng rng = make_rng(spec.seed, streams::synth, 1);
    std::uniform_int_distribution<int> shift(-max_shift, max_shift);
    std::uniform_real_distribution<double> gain(0.8, 1.0);
    std::normal_distribution<double> noise(0.0, 0.05);

    // Balanced labels in shuffled order.
    for (std::size_t i = 0; i < spec.samples; ++i)
        out.labels[i] = static_cast<std::uint8_t>(i % n_classes);
    std::shuffle(out.labels.begin(), out.labels.end(), rng);

    for (std::size_t i = 0; i < spec.samples; ++i) {
        const auto& proto = base[out.labels[i]];
        const int dx = shift(rng), dy = shift(rng);
        const double g = gain(rng);
        std::uint8_t* px = out.images.pixels.data() + i * kImagePixels;
        for (int y = 0; y < static_cast<int>(side); ++y)
            for (int x = 0; x < static_cast<int>(side); ++x) {
                const int sx = x - dx, sy = y - dy;
                double v = 0.0;
                if (sx >= 0 && sx < static_cast<int>(side) && sy >= 0 &&
                    sy < static_cast<int>(side))
                    v = g * proto[static_cast<std::size_t>(sy) * side +
                                  static_cast<std::size_t>(sx)];
                v += noise(rng);
                if (v < 0.10) v = 0.0; // clean background
                if (v > 1.0) v = 1.0;
                px[y * static_cast<int>(side) + x] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    }
    return out;
}

inline constexpr const char* kTrainImagesName = "train-images-idx3-ubyte";
inline constexpr const char* kTrainLabelsName = "train-labels-idx1-ubyte";

/// Write the synthetic corpus under the standard MNIST file names.
inline void write_synthetic_corpus(const std::filesystem::path& dir, const SynthSpec& spec) {
    std::filesystem::create_directories(dir);
    const SynthCorpus corpus = generate_synthetic_digits(spec);
    write_idx_images(dir / kTrainImagesName, corpus.images);
    write_idx_labels(dir / kTrainLabelsName, corpus.labels);
}

} // namespace plastlab
