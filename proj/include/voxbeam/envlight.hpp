// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_ENVLIGHT_HPP
#define VOXBEAM_ENVLIGHT_HPP

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <numeric>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include "image.hpp"
#include "math.hpp"
#include "parallel.hpp"

namespace voxbeam {

inline void warn(const std::string& msg) { std::clog << "voxbeam: warning: " << msg << "\n"; }

enum class MapKind { Ldr, Hdr };
enum class MapFrame { Camera, World, Warped };
enum class Sampling { Bilinear, Nearest };

/// Equirectangular map. Column c covers azimuth [-pi + 2 pi c / W, ...),
/// row r covers polar angle [pi r / H, pi (r + 1) / H] measured from +y.
/// Direction for (polar t, azimuth p) is (sin t cos p, cos t, sin t sin p).
struct RadianceMap {
    ImageRgb image;
    MapKind kind = MapKind::Ldr;
    MapFrame frame = MapFrame::Camera;

    RadianceMap() = default;
    RadianceMap(ImageRgb img, MapKind k, MapFrame f) : image(std::move(img)), kind(k), frame(f) {
        if (image.width != 2 * image.height || image.height < 1) {
            throw Error("radiance map: width must equal 2 * height (got " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + ")");
        }
        if (kind == MapKind::Hdr) {
            for (const Rgb& c : image.pixels) {
                if (!isfinite(c) || min_component(c) < 0) throw Error("radiance map: HDR pixels must be finite and >= 0");
            }
        }
    }
    static RadianceMap constant(int width, Rgb value, MapKind k, MapFrame f) {
        return RadianceMap(ImageRgb(width, width / 2, value), k, f);
    }

    int width() const { return image.width; }
    int height() const { return image.height; }
};

inline Vec3d spherical_direction(double polar, double azimuth) {
    double s = std::sin(polar);
    return {s * std::cos(azimuth), std::cos(polar), s * std::sin(azimuth)};
}

/// (u, v) in [0, 1) x [0, 1] for a unit direction.
inline std::pair<double, double> direction_to_uv(const Vec3d& d) {
    double u = (std::atan2(d.z, d.x) + kPi) / (2 * kPi);
    if (u >= 1.0) u -= 1.0;
    double v = std::acos(std::clamp(d.y, -1.0, 1.0)) / kPi;
    return {u, v};
}

inline Vec3d texel_direction(int col, int row, int width, int height) {
    return spherical_direction((row + 0.5) * kPi / height, -kPi + (col + 0.5) * 2 * kPi / width);
}

inline Rgb lookup_nearest(const ImageRgb& img, const Vec3d& d) {
    auto [u, v] = direction_to_uv(d);
    int col = int(std::floor(u * img.width)) % img.width;
    int row = std::min(int(std::floor(v * img.height)), img.height - 1);
    return img(col, row);
}

/// Bilinear with azimuthal wrap and polar clamp.
inline Rgb lookup_bilinear(const ImageRgb& img, const Vec3d& d) {
    auto [u, v] = direction_to_uv(d);
    double x = u * img.width - 0.5, y = v * img.height - 0.5;
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    float tx = float(x - x0), ty = float(y - y0);
    int xa = (x0 % img.width + img.width) % img.width;
    int xb = (xa + 1) % img.width;
    int ya = std::clamp(y0, 0, img.height - 1), yb = std::clamp(y0 + 1, 0, img.height - 1);
    // a + (b - a) t keeps flat regions exact.
    Rgb top = img(xa, ya) + (img(xb, ya) - img(xa, ya)) * tx;
    Rgb bottom = img(xa, yb) + (img(xb, yb) - img(xa, yb)) * tx;
    return top + (bottom - top) * ty;
}

inline Rgb lookup(const RadianceMap& map, const Vec3d& d, Sampling s = Sampling::Bilinear) {
    return s == Sampling::Bilinear ? lookup_bilinear(map.image, d) : lookup_nearest(map.image, d);
}

/// Fills a map of the given size by evaluating fn(direction) at each texel centre.
template <typename Fn>
ImageRgb render_equirect(int width, int height, Fn&& fn) {
    ImageRgb out(width, height);
    parallel_for(height, [&](int row) {
        for (int col = 0; col < width; ++col) out(col, row) = fn(texel_direction(col, row, width, height));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Dual fisheye stitching
// ---------------------------------------------------------------------------

/// Two equidistant fisheye images. Each lens looks down its own +z axis;
/// `rotation` takes back-lens coordinates into the front-lens (camera) frame.
struct FisheyePair {
    ImageRgb front, back;
    double fov_deg = 200.0;
    Quat rotation = Quat::from_axis_angle({0, 1, 0}, kPi);

    void validate() const {
        if (!(fov_deg > 180.0 && fov_deg < 250.0)) throw Error("fisheye: fov_deg must lie in (180, 250)");
        if (front.width != front.height || back.width != back.height) throw Error("fisheye: images must be square");
        if (front.width != back.width || front.width == 0) throw Error("fisheye: front and back must have equal size");
        if (std::abs(rotation.norm() - 1.0) > 1e-6) throw Error("fisheye: rotation must be a unit quaternion");
    }
};

/// Equidistant projection of a lens-frame direction to continuous pixel
/// coordinates in a size x size image: radius is proportional to the angle
/// from the optical axis and reaches the image edge at fov / 2.
inline std::pair<double, double> fisheye_project(const Vec3d& d_lens, double fov_rad, int size) {
    double theta = std::acos(std::clamp(d_lens.z, -1.0, 1.0));
    double phi = std::atan2(d_lens.y, d_lens.x);
    double r = theta / (fov_rad / 2) * (size / 2.0);
    return {size / 2.0 + r * std::cos(phi), size / 2.0 - r * std::sin(phi)};
}

/// Feathering weights of the two lenses for a camera-frame direction. The
/// weights fall linearly to zero at each lens' fov boundary.
struct LensWeights {
    double front = 0, back = 0;
    bool in_blend_band() const { return front > 0 && back > 0; }
};

inline LensWeights lens_weights(const Vec3d& d, double fov_rad, const Quat& rotation) {
    double half = fov_rad / 2;
    double theta_f = std::acos(std::clamp(d.z, -1.0, 1.0));
    double theta_b = std::acos(std::clamp(rotation.conjugate().rotate(d).z, -1.0, 1.0));
    return {std::max(0.0, half - theta_f), std::max(0.0, half - theta_b)};
}

inline RadianceMap stitch(const FisheyePair& pair, int width = 512, int height = 256) {
    pair.validate();
    double fov = pair.fov_deg * kPi / 180.0;
    int size = pair.front.width;
    Quat to_back = pair.rotation.conjugate();
    ImageRgb out(width, height);
    bool uncovered = false;
    parallel_for(height, [&](int row) {
        for (int col = 0; col < width; ++col) {
            Vec3d d = texel_direction(col, row, width, height);
            LensWeights w = lens_weights(d, fov, pair.rotation);
            double theta_f = std::acos(std::clamp(d.z, -1.0, 1.0));
            Vec3d db = to_back.rotate(d);
            double theta_b = std::acos(std::clamp(db.z, -1.0, 1.0));
            bool in_f = theta_f <= fov / 2, in_b = theta_b <= fov / 2;
            if (!in_f && !in_b) {
                uncovered = true;
                continue;
            }
            Rgb c;
            double sum = w.front + w.back;
            if (sum <= 0) {  // exactly on a lens boundary
                w = {in_f ? 1.0 : 0.0, in_f ? 0.0 : 1.0};
                sum = 1;
            }
            if (w.front > 0) {
                auto [px, py] = fisheye_project(d, fov, size);
                c += bilinear_clamped(pair.front, px, py) * float(w.front / sum);
            }
            if (w.back > 0) {
                auto [px, py] = fisheye_project(db, fov, size);
                c += bilinear_clamped(pair.back, px, py) * float(w.back / sum);
            }
            out(col, row) = c;
        }
    });
    if (uncovered) throw Error("stitch: some directions lie outside both lens fields of view");
    return RadianceMap(std::move(out), MapKind::Ldr, MapFrame::Camera);
}

/// Inverse of stitch: images a panorama through the two fisheye lenses.
/// Used to produce synthetic capture sequences.
inline FisheyePair synthesize_fisheye_pair(const RadianceMap& pano, int size, double fov_deg = 200.0,
                                           Quat rotation = Quat::from_axis_angle({0, 1, 0}, kPi)) {
    FisheyePair pair{ImageRgb(size, size), ImageRgb(size, size), fov_deg, rotation};
    double fov = fov_deg * kPi / 180.0;
    auto image_lens = [&](ImageRgb& img, const Quat& lens_to_camera) {
        parallel_for(size, [&](int y) {
            for (int x = 0; x < size; ++x) {
                double dx = (x + 0.5 - size / 2.0) / (size / 2.0);
                double dy = -(y + 0.5 - size / 2.0) / (size / 2.0);
                double r = std::sqrt(dx * dx + dy * dy);
                double theta = std::min(r, 1.0) * fov / 2;
                double phi = std::atan2(dy, dx);
                Vec3d d_lens{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
                img(x, y) = lookup_bilinear(pano.image, lens_to_camera.rotate(d_lens));
            }
        });
    };
    image_lens(pair.front, Quat::identity());
    image_lens(pair.back, rotation);
    return pair;
}

// ---------------------------------------------------------------------------
// Calibration and warping
// ---------------------------------------------------------------------------

inline Quat checked_unit(const Quat& q, const char* what) {
    double dev = std::abs(q.norm() - 1.0);
    if (dev > 1e-3) throw Error(std::string(what) + ": quaternion norm deviates from 1 by " + std::to_string(dev));
    if (dev > 1e-9) warn(std::string(what) + ": normalizing quaternion (norm deviation " + std::to_string(dev) + ")");
    return q.normalized();
}

/// Camera-frame panorama to world frame: texel direction d samples the input
/// at pose^-1 * d.
inline RadianceMap calibrate(const RadianceMap& pano, const Quat& pose, Sampling sampling = Sampling::Bilinear) {
    if (pano.frame != MapFrame::Camera) throw Error("calibrate: input must be in the camera frame");
    Quat inv = checked_unit(pose, "calibrate").conjugate();
    ImageRgb out = render_equirect(pano.width(), pano.height(),
                                   [&](const Vec3d& d) { return lookup(pano, inv.rotate(d), sampling); });
    return RadianceMap(std::move(out), pano.kind, MapFrame::World);
}

/// Re-centres a world-frame panorama at `offset` from the capture point,
/// modelling the surroundings as a sphere of `sphere_radius` around it.
inline RadianceMap warp_to_center(const RadianceMap& pano, const Vec3d& offset, double sphere_radius,
                                  Sampling sampling = Sampling::Bilinear) {
    if (pano.frame != MapFrame::World) throw Error("warp_to_center: input must be in the world frame");
    if (!(length(offset) < sphere_radius)) throw Error("warp_to_center: offset must lie inside the environment sphere");
    double c2 = dot(offset, offset) - sphere_radius * sphere_radius;
    ImageRgb out = render_equirect(pano.width(), pano.height(), [&](const Vec3d& d) {
        double b = dot(offset, d);
        double t = -b + std::sqrt(b * b - c2);
        return lookup(pano, normalize(offset + d * t), sampling);
    });
    return RadianceMap(std::move(out), pano.kind, MapFrame::Warped);
}

// ---------------------------------------------------------------------------
// LDR -> HDR estimation
// ---------------------------------------------------------------------------

struct HdrParams {
    double percentile = 95.0;
    double floor = 0.9;
    double boost = 50.0;
};

struct LightRegion {
    int pixel_count = 0;
    Vec3d direction;  // luminance-weighted mean direction, unit length
    float peak_luminance = 0;
};

struct LightDetection {
    float threshold = 0;  // max(percentile value, floor)
    Image<uint8_t> mask;
    std::vector<LightRegion> regions;
};

/// Light pixels: display luminance at or above both the percentile value and
/// the absolute floor. Regions are 4-connected with azimuthal wrap.
inline LightDetection detect_lights(const RadianceMap& pano, const HdrParams& params = {}) {
    const ImageRgb& img = pano.image;
    std::vector<float> lum(img.size());
    for (size_t i = 0; i < img.size(); ++i) lum[i] = luminance(img.pixels[i]);
    std::vector<float> sorted = lum;
    size_t rank = size_t(std::ceil(params.percentile / 100.0 * double(sorted.size())));
    rank = std::clamp<size_t>(rank, 1, sorted.size()) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(rank), sorted.end());
    LightDetection out;
    out.threshold = std::max(sorted[rank], float(params.floor));
    out.mask = Image<uint8_t>(img.width, img.height, 0);
    for (size_t i = 0; i < img.size(); ++i) out.mask.pixels[i] = lum[i] >= out.threshold ? 1 : 0;

    Image<int> label(img.width, img.height, -1);
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!out.mask(x, y) || label(x, y) >= 0) continue;
            int id = int(out.regions.size());
            LightRegion region;
            Vec3d dir_sum;
            stack.assign(1, {x, y});
            label(x, y) = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                float l = lum[img.index(cx, cy)];
                ++region.pixel_count;
                region.peak_luminance = std::max(region.peak_luminance, l);
                dir_sum += texel_direction(cx, cy, img.width, img.height) * double(l);
                const std::pair<int, int> next[4] = {{(cx + 1) % img.width, cy},
                                                     {(cx + img.width - 1) % img.width, cy},
                                                     {cx, cy - 1},
                                                     {cx, cy + 1}};
                for (auto [nx, ny] : next) {
                    if (ny < 0 || ny >= img.height || !out.mask(nx, ny) || label(nx, ny) >= 0) continue;
                    label(nx, ny) = id;
                    stack.push_back({nx, ny});
                }
            }
            region.direction = normalize(dir_sum);
            out.regions.push_back(region);
        }
    }
    return out;
}

/// Gamma-2.2 linearization, then light pixels are scaled by
/// 1 + (boost - 1) * (lum - floor) / (1 - floor), reaching `boost` at lum = 1.
inline RadianceMap estimate_hdr(const RadianceMap& pano, const HdrParams& params = {}) {
    if (pano.kind != MapKind::Ldr) throw Error("estimate_hdr: input must be LDR");
    LightDetection lights = detect_lights(pano, params);
    ImageRgb out(pano.width(), pano.height());
    for (size_t i = 0; i < out.size(); ++i) {
        const Rgb& c = pano.image.pixels[i];
        Rgb lin{std::pow(std::max(c.x, 0.0f), 2.2f), std::pow(std::max(c.y, 0.0f), 2.2f), std::pow(std::max(c.z, 0.0f), 2.2f)};
        if (lights.mask.pixels[i]) {
            double l = std::min<double>(luminance(c), 1.0);
            double scale = params.floor < 1.0 ? (l - params.floor) / (1.0 - params.floor) : 1.0;
            lin *= float(1.0 + (params.boost - 1.0) * std::max(scale, 0.0));
        }
        out.pixels[i] = lin;
    }
    return RadianceMap(std::move(out), MapKind::Hdr, pano.frame);
}

// ---------------------------------------------------------------------------
// Illumination difference (patch-wise log-SSIM)
// ---------------------------------------------------------------------------

/// Which patch similarity decides T: the least similar patch (default), or
/// the most similar one as the formula is literally printed.
enum class Extremal { Min, Max };

struct IlluminationDiff {
    int grid_n = 0;
    double T = 0;
    std::vector<double> per_patch;  // row-major grid_n x grid_n similarities
};

inline constexpr double kTEpsilon = 1e-6;

struct SsimConstants {
    double c1, c2;
    /// Standard K1 = 0.01, K2 = 0.03 on dynamic range `range`.
    static SsimConstants for_range(double range) {
        return {(0.01 * range) * (0.01 * range), (0.03 * range) * (0.03 * range)};
    }
};

/// SSIM of two equally sized samples using a single uniform window and
/// population moments.
inline double ssim(std::span<const double> a, std::span<const double> b, SsimConstants k) {
    double n = double(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double va = 0, vb = 0, cov = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        va += da * da;
        vb += db * db;
        cov += da * db;
    }
    va /= n;
    vb /= n;
    cov /= n;
    return ((2 * ma * mb + k.c1) * (2 * cov + k.c2)) / ((ma * ma + mb * mb + k.c1) * (va + vb + k.c2));
}

inline std::vector<double> log_luminance(const RadianceMap& map) {
    std::vector<double> out(map.image.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::log1p(std::max(0.0, double(luminance(map.image.pixels[i]))));
    return out;
}

inline IlluminationDiff illumination_difference(const RadianceMap& prev, const RadianceMap& curr, int grid_n,
                                                Extremal extremal = Extremal::Min) {
    if (prev.width() != curr.width() || prev.height() != curr.height()) throw Error("illumination_difference: dimension mismatch");
    if (grid_n < 1 || grid_n > std::min(prev.width(), prev.height())) throw Error("illumination_difference: invalid grid size");
    std::vector<double> a = log_luminance(prev), b = log_luminance(curr);
    auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    double range = std::max(*amax, *bmax) - std::min(*amin, *bmin);
    SsimConstants k = SsimConstants::for_range(range > 0 ? range : 1.0);

    int w = prev.width(), h = prev.height();
    IlluminationDiff out;
    out.grid_n = grid_n;
    out.per_patch.resize(size_t(grid_n) * size_t(grid_n));
    std::vector<double> pa, pb;
    for (int gy = 0; gy < grid_n; ++gy) {
        for (int gx = 0; gx < grid_n; ++gx) {
            pa.clear();
            pb.clear();
            for (int y = gy * h / grid_n; y < (gy + 1) * h / grid_n; ++y) {
                for (int x = gx * w / grid_n; x < (gx + 1) * w / grid_n; ++x) {
                    pa.push_back(a[size_t(y) * size_t(w) + size_t(x)]);
                    pb.push_back(b[size_t(y) * size_t(w) + size_t(x)]);
                }
            }
            out.per_patch[size_t(gy) * size_t(grid_n) + size_t(gx)] = ssim(pa, pb, k);
        }
    }
    double pick = extremal == Extremal::Min ? *std::min_element(out.per_patch.begin(), out.per_patch.end())
                                            : *std::max_element(out.per_patch.begin(), out.per_patch.end());
    out.T = std::clamp(1.0 - pick, 0.0, 1.0 - kTEpsilon);
    return out;
}

// ---------------------------------------------------------------------------
// Importance sampling
// ---------------------------------------------------------------------------

struct EnvSample {
    Vec3d direction;
    double pdf = 0;  // solid angle
    Rgb radiance;
};

/// Piecewise-constant (per texel, in solid angle) distribution proportional
/// to luminance. Texel probabilities are luminance times texel solid angle,
/// which is luminance * sin(polar) in the (u, v) parameterization.
class EnvSampler {
public:
    EnvSampler() : EnvSampler(RadianceMap::constant(2, Rgb(0.0f), MapKind::Hdr, MapFrame::Warped)) {}
    explicit EnvSampler(const RadianceMap& map) : EnvSampler(std::make_shared<const RadianceMap>(map)) {}
    explicit EnvSampler(std::shared_ptr<const RadianceMap> shared) : map_(std::move(shared)) {
        const RadianceMap& map = *map_;
        int w = map.width(), h = map.height();
        row_cos_.resize(size_t(h) + 1);
        for (int r = 0; r <= h; ++r) row_cos_[size_t(r)] = std::cos(r * kPi / h);
        texel_weight_.resize(size_t(w) * size_t(h));
        row_cdf_.assign(size_t(h) + 1, 0.0);
        col_cdf_.assign(size_t(h) * size_t(w + 1), 0.0);
        for (int r = 0; r < h; ++r) {
            double omega = (row_cos_[size_t(r)] - row_cos_[size_t(r) + 1]) * 2 * kPi / w;
            double* cdf = &col_cdf_[size_t(r) * size_t(w + 1)];
            for (int c = 0; c < w; ++c) {
                double wt = std::max(0.0, double(luminance(map.image(c, r)))) * omega;
                texel_weight_[size_t(r) * size_t(w) + size_t(c)] = wt;
                cdf[c + 1] = cdf[c] + wt;
            }
            row_cdf_[size_t(r) + 1] = row_cdf_[size_t(r)] + cdf[w];
        }
        total_ = row_cdf_[size_t(h)];
        uniform_ = !(total_ > 0) || !std::isfinite(total_);
    }

    bool uniform() const { return uniform_; }
    const RadianceMap& map() const { return *map_; }

    EnvSample sample(double u1, double u2) const {
        if (uniform_) {
            double z = 1 - 2 * u1;
            double r = std::sqrt(std::max(0.0, 1 - z * z));
            double phi = 2 * kPi * u2;
            Vec3d d{r * std::cos(phi), z, r * std::sin(phi)};
            return {d, 1.0 / (4 * kPi), lookup_bilinear(map_->image, d)};
        }
        int w = map_->width(), h = map_->height();
        double target = u1 * total_;
        int row = int(std::upper_bound(row_cdf_.begin() + 1, row_cdf_.end(), target) - row_cdf_.begin()) - 1;
        row = std::clamp(row, 0, h - 1);
        while (row_cdf_[size_t(row) + 1] - row_cdf_[size_t(row)] <= 0) --row;  // skip empty rows at the upper edge
        const double* cdf = &col_cdf_[size_t(row) * size_t(w + 1)];
        double row_mass = cdf[w];
        double ctarget = u2 * row_mass;
        int col = int(std::upper_bound(cdf + 1, cdf + w + 1, ctarget) - cdf) - 1;
        col = std::clamp(col, 0, w - 1);
        while (cdf[col + 1] - cdf[col] <= 0) --col;
        // Re-use the residual fractions of u1 and u2 inside the chosen texel.
        double fu = std::clamp((ctarget - cdf[col]) / (cdf[col + 1] - cdf[col]), 0.0, 1.0);
        double fv = std::clamp((target - row_cdf_[size_t(row)]) / (row_mass), 0.0, 1.0);
        double phi = -kPi + (col + fu) * 2 * kPi / w;
        double cos_t = row_cos_[size_t(row)] + (row_cos_[size_t(row) + 1] - row_cos_[size_t(row)]) * fv;
        double sin_t = std::sqrt(std::max(0.0, 1 - cos_t * cos_t));
        Vec3d d{sin_t * std::cos(phi), cos_t, sin_t * std::sin(phi)};
        return {d, texel_pdf(col, row), lookup_bilinear(map_->image, d)};
    }

    /// Solid-angle density of `sample` at direction d.
    double pdf(const Vec3d& d) const {
        if (uniform_) return 1.0 / (4 * kPi);
        auto [u, v] = direction_to_uv(d);
        int w = map_->width(), h = map_->height();
        int col = std::min(int(u * w), w - 1);
        int row = std::min(int(v * h), h - 1);
        return texel_pdf(col, row);
    }

    double texel_pdf(int col, int row) const {
        int w = map_->width();
        double omega = (row_cos_[size_t(row)] - row_cos_[size_t(row) + 1]) * 2 * kPi / w;
        return texel_weight_[size_t(row) * size_t(w) + size_t(col)] / (total_ * omega);
    }

private:
    std::shared_ptr<const RadianceMap> map_;
    std::vector<double> row_cos_;
    std::vector<double> texel_weight_;
    std::vector<double> row_cdf_;
    std::vector<double> col_cdf_;
    double total_ = 0;
    bool uniform_ = true;
};

// ---------------------------------------------------------------------------
// Pre-filtered levels
// ---------------------------------------------------------------------------

/// Normalized discrete Gaussian with radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    int radius = int(std::ceil(3 * sigma));
    std::vector<double> k(size_t(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) sum += k[size_t(i + radius)] = std::exp(-(i * i) / (2 * sigma * sigma));
    for (double& v : k) v /= sum;
    return k;
}

/// Separable blur, azimuth wraps and polar rows clamp.
inline ImageRgb blur_equirect(const ImageRgb& img, double sigma) {
    std::vector<double> k = gaussian_kernel(sigma);
    int radius = int(k.size() / 2);
    ImageRgb tmp(img.width, img.height), out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Vec3d acc;
            for (int i = -radius; i <= radius; ++i) {
                int xx = ((x + i) % img.width + img.width) % img.width;
                acc += to_d(img(xx, y)) * k[size_t(i + radius)];
            }
            tmp(x, y) = to_f(acc);
        }
    }
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Vec3d acc;
            for (int i = -radius; i <= radius; ++i) {
                int yy = std::clamp(y + i, 0, img.height - 1);
                acc += to_d(tmp(x, yy)) * k[size_t(i + radius)];
            }
            out(x, y) = to_f(acc);
        }
    }
    return out;
}

inline ImageRgb downsample2(const ImageRgb& img) {
    ImageRgb out(img.width / 2, img.height / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            Vec3d s = to_d(img(2 * x, 2 * y)) + to_d(img(2 * x + 1, 2 * y)) + to_d(img(2 * x, 2 * y + 1)) +
                      to_d(img(2 * x + 1, 2 * y + 1));
            out(x, y) = to_f(s * 0.25);
        }
    }
    return out;
}

/// Level 0 is the input; level k blurs level k-1 with sigma = 2^(k-1)
/// texels (of level k-1) and halves its resolution.
inline std::vector<RadianceMap> prefilter(const RadianceMap& pano, int levels) {
    if (levels < 1) throw Error("prefilter: levels must be >= 1");
    if (levels > int(std::floor(std::log2(double(pano.height()))))) throw Error("prefilter: levels exceed log2(height)");
    if (pano.height() % (1 << (levels - 1)) != 0) throw Error("prefilter: height must be divisible by 2^(levels - 1)");
    std::vector<RadianceMap> out{pano};
    for (int l = 1; l < levels; ++l) {
        const RadianceMap& prev = out.back();
        double sigma = std::ldexp(1.0, l - 1);
        out.emplace_back(downsample2(blur_equirect(prev.image, sigma)), prev.kind, prev.frame);
    }
    return out;
}

}  // namespace voxbeam

#endif
