#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "detail/binary_io.hpp"
#include "detail/sha256.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace rbmkit {

// n grayscale images, pixels in [0,1], row-major per image, integer labels.
struct ImageDataset {
    std::size_t n = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t n_classes = 10;
    std::vector<double> pixels;  // n * width * height
    std::vector<int> labels;     // n

    std::size_t dim() const { return width * height; }

    std::span<const double> row(std::size_t i) const {
        return {pixels.data() + i * dim(), dim()};
    }

    std::span<double> mutable_row(std::size_t i) {
        return {pixels.data() + i * dim(), dim()};
    }
};

// Validating constructor; pixel range and label range are rejected, never
// silently clamped.
inline ImageDataset make_dataset(std::size_t width, std::size_t height,
                                 std::size_t n_classes,
                                 std::vector<double> pixels,
                                 std::vector<int> labels) {
    if (width == 0 || height == 0) {
        throw DimensionError("image dimensions must be positive");
    }
    const std::size_t dim = width * height;
    if (pixels.size() % dim != 0 || pixels.size() / dim != labels.size()) {
        throw DimensionError("pixel buffer and label count do not agree");
    }
    for (double p : pixels) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw FormatError("pixel value outside [0,1]");
        }
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
            throw FormatError("label outside [0, n_classes)");
        }
    }
    ImageDataset ds;
    ds.n = labels.size();
    ds.width = width;
    ds.height = height;
    ds.n_classes = n_classes;
    ds.pixels = std::move(pixels);
    ds.labels = std::move(labels);
    return ds;
}

// --- IDX container (big-endian; images magic 0x803, labels magic 0x801) ---

inline ImageDataset load_idx(const std::string& images_path,
                             const std::string& labels_path,
                             std::size_t n_classes = 10) {
    auto imgs = detail::open_input(images_path);
    const std::uint32_t img_magic = detail::read_u32_be(imgs, "idx image magic");
    if (img_magic != 0x00000803u) {
        throw FormatError("bad magic in idx image file (want 0x00000803): " +
                          images_path);
    }
    const std::uint32_t n = detail::read_u32_be(imgs, "idx image count");
    const std::uint32_t rows = detail::read_u32_be(imgs, "idx rows");
    const std::uint32_t cols = detail::read_u32_be(imgs, "idx cols");

    auto labs = detail::open_input(labels_path);
    const std::uint32_t lab_magic = detail::read_u32_be(labs, "idx label magic");
    if (lab_magic != 0x00000801u) {
        throw FormatError("bad magic in idx label file (want 0x00000801): " +
                          labels_path);
    }
    const std::uint32_t n_labels = detail::read_u32_be(labs, "idx label count");
    if (n != n_labels) {
        throw FormatError("idx image/label count mismatch: " +
                          std::to_string(n) + " images vs " +
                          std::to_string(n_labels) + " labels");
    }

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> raw(static_cast<std::size_t>(n) * dim);
    if (!raw.empty()) {
        detail::read_bytes(imgs, raw.data(), raw.size(), "idx pixel data");
    }
    std::vector<unsigned char> raw_labels(n);
    if (!raw_labels.empty()) {
        detail::read_bytes(labs, raw_labels.data(), raw_labels.size(),
                           "idx label data");
    }

    std::vector<double> pixels(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        pixels[i] = static_cast<double>(raw[i]) / 255.0;
    }
    std::vector<int> labels(raw_labels.begin(), raw_labels.end());
    return make_dataset(cols, rows, n_classes, std::move(pixels),
                        std::move(labels));
}

// Quantizes pixels to u8 (round(p * 255)); round-trips exactly for data
// that originated as u8.
inline std::vector<unsigned char> quantized_pixels(const ImageDataset& ds) {
    std::vector<unsigned char> raw(ds.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<unsigned char>(
            std::lround(ds.pixels[i] * 255.0));
    }
    return raw;
}

inline void save_idx(const ImageDataset& ds, const std::string& images_path,
                     const std::string& labels_path) {
    auto imgs = detail::open_output(images_path);
    detail::write_u32_be(imgs, 0x00000803u);
    detail::write_u32_be(imgs, static_cast<std::uint32_t>(ds.n));
    detail::write_u32_be(imgs, static_cast<std::uint32_t>(ds.height));
    detail::write_u32_be(imgs, static_cast<std::uint32_t>(ds.width));
    const std::vector<unsigned char> raw = quantized_pixels(ds);
    if (!raw.empty()) {
        detail::write_bytes(imgs, raw.data(), raw.size());
    }
    imgs.flush();
    if (!imgs) {
        throw IoError("write failed: " + images_path);
    }

    auto labs = detail::open_output(labels_path);
    detail::write_u32_be(labs, 0x00000801u);
    detail::write_u32_be(labs, static_cast<std::uint32_t>(ds.n));
    for (int y : ds.labels) {
        const unsigned char byte = static_cast<unsigned char>(y);
        detail::write_bytes(labs, &byte, 1);
    }
    labs.flush();
    if (!labs) {
        throw IoError("write failed: " + labels_path);
    }
}

// --- transformations ---

// p -> 1 - p; an involution, labels untouched.
inline ImageDataset invert(const ImageDataset& ds) {
    ImageDataset out = ds;
    for (double& p : out.pixels) {
        p = 1.0 - p;
    }
    return out;
}

inline ImageDataset concat(const ImageDataset& a, const ImageDataset& b) {
    if (b.n == 0) {
        return a;
    }
    if (a.n == 0) {
        return b;
    }
    if (a.width != b.width || a.height != b.height) {
        throw DimensionError("concat requires equal image dimensions");
    }
    ImageDataset out = a;
    out.n = a.n + b.n;
    out.n_classes = std::max(a.n_classes, b.n_classes);
    out.pixels.insert(out.pixels.end(), b.pixels.begin(), b.pixels.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

// Block-mean pooling by an integer factor.
inline ImageDataset downscale(const ImageDataset& ds, std::size_t factor) {
    if (factor == 0) {
        throw ConfigError("downscale factor must be positive");
    }
    if (ds.width % factor != 0 || ds.height % factor != 0) {
        throw DimensionError("image dimensions not divisible by factor " +
                             std::to_string(factor));
    }
    if (factor == 1) {
        return ds;
    }
    const std::size_t w = ds.width / factor;
    const std::size_t h = ds.height / factor;
    ImageDataset out;
    out.n = ds.n;
    out.width = w;
    out.height = h;
    out.n_classes = ds.n_classes;
    out.labels = ds.labels;
    out.pixels.assign(ds.n * w * h, 0.0);
    const double norm = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t img = 0; img < ds.n; ++img) {
        const double* src = ds.pixels.data() + img * ds.dim();
        double* dst = out.pixels.data() + img * w * h;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (std::size_t dy = 0; dy < factor; ++dy) {
                    for (std::size_t dx = 0; dx < factor; ++dx) {
                        acc += src[(y * factor + dy) * ds.width +
                                   (x * factor + dx)];
                    }
                }
                dst[y * w + x] = acc * norm;
            }
        }
    }
    return out;
}

// Background synthesis for the target domain: per image, a uniform noise
// field is box-blurred, min-max stretched back to [0,1], scaled by
// amplitude, and composed as |foreground - background| (clamped; the one
// documented clamp in the library).
struct BackgroundConfig {
    double amplitude = 1.0;
    std::size_t blur_radius = 2;
};

namespace detail {

inline void box_blur(std::vector<double>& img, std::size_t w, std::size_t h,
                     std::size_t radius, std::vector<double>& scratch) {
    if (radius == 0) {
        return;
    }
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(radius);
    scratch.assign(img.size(), 0.0);
    // horizontal pass, window normalized by the in-bounds count
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            int cnt = 0;
            for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                const std::ptrdiff_t xi = static_cast<std::ptrdiff_t>(x) + dx;
                if (xi >= 0 && xi < static_cast<std::ptrdiff_t>(w)) {
                    acc += img[y * w + static_cast<std::size_t>(xi)];
                    ++cnt;
                }
            }
            scratch[y * w + x] = acc / cnt;
        }
    }
    // vertical pass
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            int cnt = 0;
            for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
                const std::ptrdiff_t yi = static_cast<std::ptrdiff_t>(y) + dy;
                if (yi >= 0 && yi < static_cast<std::ptrdiff_t>(h)) {
                    acc += scratch[static_cast<std::size_t>(yi) * w + x];
                    ++cnt;
                }
            }
            img[y * w + x] = acc / cnt;
        }
    }
}

inline void background_field(std::vector<double>& field, std::size_t w,
                             std::size_t h, std::size_t radius, Rng& rng,
                             std::vector<double>& scratch) {
    field.resize(w * h);
    for (double& p : field) {
        p = rng.next_double();
    }
    box_blur(field, w, h, radius, scratch);
    double lo = field[0];
    double hi = field[0];
    for (double p : field) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    if (hi - lo < 1e-12) {
        std::fill(field.begin(), field.end(), 0.5);
        return;
    }
    for (double& p : field) {
        p = (p - lo) / (hi - lo);
    }
}

} // namespace detail

// Synthesizes the shifted domain from clean images. Deterministic given
// the incoming rng state; image i uses the child stream keyed by i.
inline ImageDataset make_target_domain(const ImageDataset& ds,
                                       const BackgroundConfig& cfg,
                                       const Rng& rng) {
    if (!(cfg.amplitude >= 0.0 && cfg.amplitude <= 1.0)) {
        throw ConfigError("background amplitude must lie in [0,1]");
    }
    if (cfg.blur_radius > std::max(ds.width, ds.height)) {
        throw ConfigError("blur radius exceeds image size");
    }
    ImageDataset out = ds;
    std::vector<double> field;
    std::vector<double> scratch;
    for (std::size_t img = 0; img < ds.n; ++img) {
        Rng img_rng = rng.child(img);
        detail::background_field(field, ds.width, ds.height, cfg.blur_radius,
                                 img_rng, scratch);
        double* dst = out.pixels.data() + img * ds.dim();
        for (std::size_t p = 0; p < ds.dim(); ++p) {
            const double v = std::abs(dst[p] - cfg.amplitude * field[p]);
            dst[p] = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

// --- PGM (P5, maxval 255) ---

inline void write_pgm(const std::string& path, std::size_t width,
                      std::size_t height, std::span<const double> pixels) {
    if (pixels.size() != width * height) {
        throw DimensionError("pgm pixel count does not match dimensions");
    }
    auto os = detail::open_output(path);
    const std::string header = "P5\n" + std::to_string(width) + " " +
                               std::to_string(height) + "\n255\n";
    detail::write_bytes(os, header.data(), header.size());
    std::vector<unsigned char> raw(pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<unsigned char>(
            std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0));
    }
    detail::write_bytes(os, raw.data(), raw.size());
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

// Tiles images (all width x height) into a grid with a 1px separator.
inline void write_pgm_grid(const std::string& path,
                           const std::vector<std::vector<double>>& images,
                           std::size_t width, std::size_t height,
                           std::size_t columns) {
    if (images.empty() || columns == 0) {
        throw ConfigError("pgm grid needs at least one image and one column");
    }
    for (const auto& img : images) {
        if (img.size() != width * height) {
            throw DimensionError("grid image size mismatch");
        }
    }
    const std::size_t rows = (images.size() + columns - 1) / columns;
    const std::size_t gw = columns * (width + 1) - 1;
    const std::size_t gh = rows * (height + 1) - 1;
    std::vector<double> canvas(gw * gh, 0.25);  // separator gray
    for (std::size_t idx = 0; idx < images.size(); ++idx) {
        const std::size_t gx = (idx % columns) * (width + 1);
        const std::size_t gy = (idx / columns) * (height + 1);
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                canvas[(gy + y) * gw + (gx + x)] = images[idx][y * width + x];
            }
        }
    }
    write_pgm(path, gw, gh, canvas);
}

// Manifest fingerprint: sha256 over the u8 quantization, i.e. the bytes an
// IDX export would contain.
inline std::string dataset_sha256(const ImageDataset& ds) {
    const std::vector<unsigned char> raw = quantized_pixels(ds);
    return detail::sha256_hex(raw.data(), raw.size());
}

} // namespace rbmkit
