// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_VOLUME_HPP
#define VOXBEAM_VOLUME_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "image_io.hpp"
#include "math.hpp"

namespace voxbeam {

using nlohmann::json;

/// Scalar field on a regular lattice. Voxel (i, j, k) sits at
/// origin + (i, j, k) * spacing; values are x-fastest and lie in [0, 1].
class VolumeGrid {
public:
    VolumeGrid() = default;
    VolumeGrid(Vec3i dims, Vec3d spacing, Vec3d origin, std::vector<float> values, int bits = 16)
        : dims_(dims), spacing_(spacing), origin_(origin), values_(std::move(values)), bits_(bits) {
        if (dims.x < 2 || dims.y < 2 || dims.z < 2) throw Error("volume: every dimension must be >= 2");
        if (spacing.x <= 0 || spacing.y <= 0 || spacing.z <= 0) throw Error("volume: spacing must be positive");
        if (bits != 8 && bits != 16) throw Error("volume: bits must be 8 or 16");
        if (values_.size() != size_t(dims.x) * size_t(dims.y) * size_t(dims.z)) {
            throw Error("volume: value count " + std::to_string(values_.size()) + " does not match dims");
        }
        for (float& v : values_) {
            if (!(v >= 0.0f && v <= 1.0f)) throw Error("volume: scalar outside [0, 1]");
        }
        inv_spacing_ = {1.0 / spacing.x, 1.0 / spacing.y, 1.0 / spacing.z};
    }

    const Vec3i& dims() const { return dims_; }
    const Vec3d& spacing() const { return spacing_; }
    const Vec3d& origin() const { return origin_; }
    int bits() const { return bits_; }
    const std::vector<float>& values() const { return values_; }

    Bounds3 bounds() const {
        return {origin_, origin_ + Vec3d(spacing_.x * (dims_.x - 1), spacing_.y * (dims_.y - 1), spacing_.z * (dims_.z - 1))};
    }
    double min_spacing() const { return std::min({spacing_.x, spacing_.y, spacing_.z}); }

    float at(int i, int j, int k) const { return values_[(size_t(k) * size_t(dims_.y) + size_t(j)) * size_t(dims_.x) + size_t(i)]; }

    /// Trilinear interpolation inside the bounding box, exactly 0 outside.
    double sample(const Vec3d& p) const {
        double lx = (p.x - origin_.x) * inv_spacing_.x;
        double ly = (p.y - origin_.y) * inv_spacing_.y;
        double lz = (p.z - origin_.z) * inv_spacing_.z;
        if (!(lx >= 0 && ly >= 0 && lz >= 0 && lx <= dims_.x - 1 && ly <= dims_.y - 1 && lz <= dims_.z - 1)) return 0.0;
        int i = std::min(int(lx), dims_.x - 2);
        int j = std::min(int(ly), dims_.y - 2);
        int k = std::min(int(lz), dims_.z - 2);
        double fx = lx - i, fy = ly - j, fz = lz - k;
        size_t sx = 1, sy = size_t(dims_.x), sz = size_t(dims_.x) * size_t(dims_.y);
        const float* v = values_.data() + size_t(k) * sz + size_t(j) * sy + size_t(i);
        double c00 = v[0] + (v[sx] - v[0]) * fx;
        double c10 = v[sy] + (v[sy + sx] - v[sy]) * fx;
        double c01 = v[sz] + (v[sz + sx] - v[sz]) * fx;
        double c11 = v[sz + sy] + (v[sz + sy + sx] - v[sz + sy]) * fx;
        double c0 = c00 + (c10 - c00) * fy;
        double c1 = c01 + (c11 - c01) * fy;
        return c0 + (c1 - c0) * fz;
    }

    /// Central differences of sample() with a one-voxel step per axis.
    Vec3d gradient(const Vec3d& p) const {
        if (!bounds().contains(p)) return {};
        Vec3d g;
        for (int a = 0; a < 3; ++a) {
            Vec3d step;
            step[a] = spacing_[a];
            g[a] = (sample(p + step) - sample(p - step)) / (2.0 * spacing_[a]);
        }
        return g;
    }

private:
    Vec3i dims_{2, 2, 2};
    Vec3d spacing_{1, 1, 1};
    Vec3d origin_{};
    std::vector<float> values_ = std::vector<float>(8, 0.0f);
    int bits_ = 16;
    Vec3d inv_spacing_{1, 1, 1};
};

struct TfNode {
    double s = 0;
    Rgb rgb;
    double extinction_scale = 0;  // fraction of sigma_max, in [0, 1]
};

struct Classified {
    Rgb albedo;
    double sigma_t = 0;
};

/// Piecewise-linear classification of scalars into albedo and extinction.
class TransferFunction {
public:
    TransferFunction() : TransferFunction({{0.0, Rgb(1.0f), 0.0}, {1.0, Rgb(1.0f), 1.0}}, 1.0) {}
    TransferFunction(std::vector<TfNode> nodes, double sigma_max) : nodes_(std::move(nodes)), sigma_max_(sigma_max) {
        if (nodes_.size() < 2) throw Error("transfer function: need at least two nodes");
        if (nodes_.front().s != 0.0 || nodes_.back().s != 1.0) throw Error("transfer function: nodes must span [0, 1]");
        for (size_t i = 1; i < nodes_.size(); ++i) {
            if (!(nodes_[i].s > nodes_[i - 1].s)) throw Error("transfer function: node scalars must strictly increase");
        }
        for (const auto& n : nodes_) {
            if (!(n.extinction_scale >= 0 && n.extinction_scale <= 1)) throw Error("transfer function: extinction scale outside [0, 1]");
            if (min_component(n.rgb) < 0 || max_component(n.rgb) > 1) throw Error("transfer function: rgb outside [0, 1]");
        }
        if (!(sigma_max > 0) || !std::isfinite(sigma_max)) throw Error("transfer function: sigma_max must be positive");
    }

    const std::vector<TfNode>& nodes() const { return nodes_; }
    double sigma_max() const { return sigma_max_; }

    Classified classify(double s) const {
        s = std::clamp(s, 0.0, 1.0);
        size_t i = 1;
        while (i + 1 < nodes_.size() && s > nodes_[i].s) ++i;
        const TfNode& a = nodes_[i - 1];
        const TfNode& b = nodes_[i];
        if (s == a.s) return {a.rgb, a.extinction_scale * sigma_max_};
        if (s == b.s) return {b.rgb, b.extinction_scale * sigma_max_};
        double t = (s - a.s) / (b.s - a.s);
        Rgb rgb = a.rgb + (b.rgb - a.rgb) * float(t);
        return {rgb, (a.extinction_scale + (b.extinction_scale - a.extinction_scale) * t) * sigma_max_};
    }

    double extinction(double s) const { return classify(s).sigma_t; }

    /// Lipschitz bound of classify over s, taken over every output channel
    /// (rgb and sigma_t).
    double lipschitz_bound() const {
        double k = 0;
        for (size_t i = 1; i < nodes_.size(); ++i) {
            const auto& a = nodes_[i - 1];
            const auto& b = nodes_[i];
            double ds = b.s - a.s;
            for (int c = 0; c < 3; ++c) k = std::max(k, std::abs(double(b.rgb[c] - a.rgb[c])) / ds);
            k = std::max(k, std::abs(b.extinction_scale - a.extinction_scale) * sigma_max_ / ds);
        }
        return k;
    }

private:
    std::vector<TfNode> nodes_;
    double sigma_max_ = 1.0;
};

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Vec3d json_vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw Error(std::string(what) + ": expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

/// Loads a volume from its structured-text header (keys: dims, spacing,
/// bits, origin, data_file). The raw file is little-endian, x-fastest.
inline VolumeGrid load_volume(const fs::path& header_path) {
    json h;
    try {
        std::ifstream in(header_path);
        if (!in) throw Error("cannot open " + header_path.string());
        h = json::parse(in);
        Vec3d d = json_vec3(h.at("dims"), "dims");
        Vec3i dims{int(d.x), int(d.y), int(d.z)};
        Vec3d spacing = h.contains("spacing") ? json_vec3(h["spacing"], "spacing") : Vec3d(1.0);
        Vec3d origin = h.contains("origin") ? json_vec3(h["origin"], "origin") : Vec3d();
        int bits = h.at("bits").get<int>();
        if (bits != 8 && bits != 16) throw Error("bits must be 8 or 16");
        if (dims.x < 2 || dims.y < 2 || dims.z < 2) throw Error("every dimension must be >= 2");
        fs::path data = header_path.parent_path() / h.at("data_file").get<std::string>();
        auto raw = read_file_bytes(data);
        size_t count = size_t(dims.x) * size_t(dims.y) * size_t(dims.z);
        size_t need = count * size_t(bits / 8);
        if (raw.size() != need) {
            throw Error("data file " + data.string() + " has " + std::to_string(raw.size()) + " bytes, expected " +
                        std::to_string(need));
        }
        std::vector<float> values(count);
        for (size_t i = 0; i < count; ++i) {
            values[i] = bits == 8 ? float(raw[i]) / 255.0f : float(uint16_t(raw[2 * i] | (raw[2 * i + 1] << 8))) / 65535.0f;
        }
        return VolumeGrid(dims, spacing, origin, std::move(values), bits);
    } catch (const json::exception& e) {
        throw Error("volume header " + header_path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error("volume header " + header_path.string() + ": " + e.what());
    }
}

/// Writes header + raw data; values are quantized to the grid's bit depth.
inline void save_volume(const fs::path& header_path, const VolumeGrid& grid) {
    fs::path data_name = header_path.stem().string() + ".raw";
    json h = {{"dims", {grid.dims().x, grid.dims().y, grid.dims().z}},
              {"spacing", to_json(grid.spacing())},
              {"origin", to_json(grid.origin())},
              {"bits", grid.bits()},
              {"data_file", data_name.string()}};
    std::vector<uint8_t> raw;
    raw.reserve(grid.values().size() * size_t(grid.bits() / 8));
    for (float v : grid.values()) {
        if (grid.bits() == 8) {
            raw.push_back(uint8_t(std::lround(v * 255.0f)));
        } else {
            auto q = uint16_t(std::lround(double(v) * 65535.0));
            raw.push_back(uint8_t(q & 0xff));
            raw.push_back(uint8_t(q >> 8));
        }
    }
    write_file_bytes(header_path.parent_path() / data_name, raw);
    std::ofstream(header_path) << h.dump(2) << "\n";
}

inline TransferFunction transfer_function_from_json(const json& j) {
    try {
        std::vector<TfNode> nodes;
        for (const auto& n : j.at("nodes")) {
            nodes.push_back({n.at("s").get<double>(), to_f(json_vec3(n.at("rgb"), "rgb")), n.at("extinction").get<double>()});
        }
        return TransferFunction(std::move(nodes), j.at("sigma_max").get<double>());
    } catch (const json::exception& e) {
        throw Error(std::string("transfer function: ") + e.what());
    }
}

inline json to_json(const TransferFunction& tf) {
    json nodes = json::array();
    for (const auto& n : tf.nodes()) nodes.push_back({{"s", n.s}, {"rgb", to_json(to_d(n.rgb))}, {"extinction", n.extinction_scale}});
    return {{"sigma_max", tf.sigma_max()}, {"nodes", nodes}};
}

inline TransferFunction load_transfer_function(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return transfer_function_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

}  // namespace voxbeam

#endif
