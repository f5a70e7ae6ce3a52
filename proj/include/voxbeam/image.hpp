// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_IMAGE_HPP
#define VOXBEAM_IMAGE_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "math.hpp"

namespace voxbeam {

/// Row-major image, row 0 at the top.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(size_t(w) * size_t(h), fill) {}

    bool empty() const { return pixels.empty(); }
    size_t size() const { return pixels.size(); }
    size_t index(int x, int y) const { return size_t(y) * size_t(width) + size_t(x); }
    T& operator()(int x, int y) { return pixels[index(x, y)]; }
    const T& operator()(int x, int y) const { return pixels[index(x, y)]; }

    friend bool operator==(const Image&, const Image&) = default;
};

using ImageRgb = Image<Rgb>;

/// Bilinear lookup at continuous pixel coordinates (pixel centres at i + 0.5),
/// clamped to the border.
inline Rgb bilinear_clamped(const ImageRgb& img, double px, double py) {
    double fx = px - 0.5, fy = py - 0.5;
    int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
    float tx = float(fx - x0), ty = float(fy - y0);
    auto cx = [&](int x) { return std::clamp(x, 0, img.width - 1); };
    auto cy = [&](int y) { return std::clamp(y, 0, img.height - 1); };
    Rgb a = img(cx(x0), cy(y0)), b = img(cx(x0 + 1), cy(y0));
    Rgb c = img(cx(x0), cy(y0 + 1)), d = img(cx(x0 + 1), cy(y0 + 1));
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

inline double mse(const ImageRgb& a, const ImageRgb& b) {
    if (a.width != b.width || a.height != b.height) throw Error("mse: image size mismatch");
    double sum = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        Vec3d d = to_d(a.pixels[i]) - to_d(b.pixels[i]);
        sum += dot(d, d);
    }
    return sum / double(3 * a.size());
}

/// PSNR in dB against a peak value of 1.
inline double psnr(const ImageRgb& a, const ImageRgb& b) {
    double m = mse(a, b);
    return m > 0 ? 10.0 * std::log10(1.0 / m) : kInf;
}

}  // namespace voxbeam

#endif
