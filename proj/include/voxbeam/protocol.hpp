// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_PROTOCOL_HPP
#define VOXBEAM_PROTOCOL_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "config.hpp"
#include "image_io.hpp"

namespace voxbeam {

// ---------------------------------------------------------------------------
// FramePacket
// ---------------------------------------------------------------------------
//
// 13-byte header, little-endian:
//   0  'V' 'B'
//   2  version u8
//   3  frame id u32
//   7  eye u8 (0 = L, 1 = R)
//   8  width u16
//  10  height u16
//  12  encoding u8 (0 = raw tone-mapped RGB8, row-major top-to-bottom; 1 = PNG)
// followed by the payload.

inline constexpr uint8_t kProtocolVersion = 1;
inline constexpr size_t kHeaderSize = 13;

enum class Encoding : uint8_t { Raw = 0, Png = 1 };

struct FramePacket {
    uint32_t frame_id = 0;
    Eye eye = Eye::Left;
    uint16_t width = 0;
    uint16_t height = 0;
    Encoding encoding = Encoding::Raw;
    std::vector<uint8_t> payload;

    friend bool operator==(const FramePacket&, const FramePacket&) = default;
};

namespace detail {
inline void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(uint8_t(v));
    b.push_back(uint8_t(v >> 8));
}
inline void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(uint8_t(v >> (8 * i)));
}
inline uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }
inline uint32_t get_u32(const uint8_t* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}
}  // namespace detail

inline std::vector<uint8_t> encode_header(const FramePacket& p) {
    std::vector<uint8_t> b{'V', 'B', kProtocolVersion};
    detail::put_u32(b, p.frame_id);
    b.push_back(uint8_t(p.eye));
    detail::put_u16(b, p.width);
    detail::put_u16(b, p.height);
    b.push_back(uint8_t(p.encoding));
    return b;
}

inline std::vector<uint8_t> serialize(const FramePacket& p) {
    std::vector<uint8_t> b = encode_header(p);
    b.insert(b.end(), p.payload.begin(), p.payload.end());
    return b;
}

/// Tone-maps a linear image and packs it for one eye.
inline FramePacket make_packet(const ImageRgb& linear, uint32_t frame_id, Eye eye, Encoding enc) {
    if (linear.width < 1 || linear.height < 1 || linear.width > 0xffff || linear.height > 0xffff) {
        throw Error("packet: image dimensions out of range");
    }
    Rgb8Image rgb = tonemap(linear);
    FramePacket p{frame_id, eye, uint16_t(linear.width), uint16_t(linear.height), enc, {}};
    p.payload = enc == Encoding::Png ? encode_png(rgb) : std::move(rgb.bytes);
    return p;
}

inline std::vector<uint8_t> encode_packet(const ImageRgb& linear, uint32_t frame_id, Eye eye, Encoding enc) {
    return serialize(make_packet(linear, frame_id, eye, enc));
}

inline FramePacket decode_packet(std::span<const uint8_t> b) {
    if (b.size() < kHeaderSize) {
        throw Error("packet: header needs " + std::to_string(kHeaderSize) + " bytes, got " + std::to_string(b.size()));
    }
    if (b[0] != 'V' || b[1] != 'B') throw Error("packet: bad magic");
    if (b[2] != kProtocolVersion) throw Error("packet: unsupported version " + std::to_string(b[2]));
    FramePacket p;
    p.frame_id = detail::get_u32(&b[3]);
    if (b[7] > 1) throw Error("packet: bad eye " + std::to_string(b[7]));
    p.eye = Eye(b[7]);
    p.width = detail::get_u16(&b[8]);
    p.height = detail::get_u16(&b[10]);
    if (p.width == 0 || p.height == 0) throw Error("packet: zero dimensions");
    if (b[12] > 1) throw Error("packet: unknown encoding " + std::to_string(b[12]));
    p.encoding = Encoding(b[12]);
    auto payload = b.subspan(kHeaderSize);
    if (p.encoding == Encoding::Raw) {
        size_t expected = size_t(p.width) * size_t(p.height) * 3;
        if (payload.size() != expected) {
            throw Error("packet: raw payload length mismatch (expected " + std::to_string(expected) + " bytes, got " +
                        std::to_string(payload.size()) + ")");
        }
    } else {
        // Only the IHDR is checked here; the full decode is the consumer's job.
        static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
        if (payload.size() < 33 || !std::equal(sig, sig + 8, payload.begin())) {
            throw Error("packet: PNG payload truncated or missing signature (" + std::to_string(payload.size()) + " bytes)");
        }
        uint32_t w = (uint32_t(payload[16]) << 24) | (uint32_t(payload[17]) << 16) | (uint32_t(payload[18]) << 8) | payload[19];
        uint32_t h = (uint32_t(payload[20]) << 24) | (uint32_t(payload[21]) << 16) | (uint32_t(payload[22]) << 8) | payload[23];
        if (w != p.width || h != p.height) throw Error("packet: PNG dimensions disagree with header");
    }
    p.payload.assign(payload.begin(), payload.end());
    return p;
}

/// Payload as 8-bit RGB regardless of encoding.
inline Rgb8Image packet_pixels(const FramePacket& p) {
    if (p.encoding == Encoding::Raw) return {p.width, p.height, p.payload};
    Rgb8Image img = decode_png(p.payload);
    if (img.width != p.width || img.height != p.height) throw Error("packet: PNG dimensions disagree with header");
    return img;
}

// ---------------------------------------------------------------------------
// Control messages (JSON text with a "type" field)
// ---------------------------------------------------------------------------

struct PoseMsg {
    Pose pose;
};
struct VolumeOffsetMsg {
    Vec3d offset;
};
struct ModeMsg {
    RenderMode mode;
};
struct EnvMsg {
    std::string preset;                // named preset, or
    std::optional<uint32_t> upload_id;  // a previously uploaded panorama
};
struct TfMsg {
    std::string preset;
};
struct ParamsMsg {
    json overrides;
};

using ControlMessage = std::variant<PoseMsg, VolumeOffsetMsg, ModeMsg, EnvMsg, TfMsg, ParamsMsg>;

inline ControlMessage parse_control(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error("control message is not a JSON object");
    if (!j.contains("type") || !j["type"].is_string()) throw Error("control message lacks a string 'type'");
    std::string type = j["type"];
    try {
        if (type == "pose") {
            return PoseMsg{{json_vec3(j.at("position"), "position"), checked_unit(json_quat(j.at("orientation")), "pose")}};
        }
        if (type == "volume_offset") return VolumeOffsetMsg{json_vec3(j.at("offset"), "offset")};
        if (type == "mode") return ModeMsg{parse_render_mode(j.at("mode").get<std::string>())};
        if (type == "env") {
            EnvMsg m;
            if (j.contains("id")) m.upload_id = j["id"].get<uint32_t>();
            else m.preset = j.at("name").get<std::string>();
            return m;
        }
        if (type == "tf") return TfMsg{j.at("name").get<std::string>()};
        if (type == "params") {
            json o = j;
            o.erase("type");
            return ParamsMsg{o};
        }
    } catch (const json::exception& e) {
        throw Error(type + ": " + e.what());
    }
    throw Error("unknown control message type '" + type + "'");
}

inline std::string serialize_control(const ControlMessage& m) {
    return std::visit(
        [](const auto& msg) -> std::string {
            using T = std::decay_t<decltype(msg)>;
            json j;
            if constexpr (std::is_same_v<T, PoseMsg>) {
                j = {{"type", "pose"}, {"position", to_json(msg.pose.position)}, {"orientation", to_json(msg.pose.orientation)}};
            } else if constexpr (std::is_same_v<T, VolumeOffsetMsg>) {
                j = {{"type", "volume_offset"}, {"offset", to_json(msg.offset)}};
            } else if constexpr (std::is_same_v<T, ModeMsg>) {
                j = {{"type", "mode"}, {"mode", to_string(msg.mode)}};
            } else if constexpr (std::is_same_v<T, EnvMsg>) {
                j = {{"type", "env"}};
                if (msg.upload_id) j["id"] = *msg.upload_id;
                else j["name"] = msg.preset;
            } else if constexpr (std::is_same_v<T, TfMsg>) {
                j = {{"type", "tf"}, {"name", msg.preset}};
            } else {
                j = msg.overrides;
                j["type"] = "params";
            }
            return j.dump();
        },
        m);
}

struct StatsMsg {
    uint32_t frame = 0;
    double T = 0;
    double env_ms = 0;
    double render_ms = 0;
    double denoise_ms = 0;
    RenderMode mode = RenderMode::VptEnv;
    uint32_t dropped = 0;
};

inline std::string serialize_stats(const StatsMsg& s) {
    return json{{"type", "stats"},         {"frame", s.frame},     {"T", s.T},
                {"env_ms", s.env_ms},      {"render_ms", s.render_ms}, {"denoise_ms", s.denoise_ms},
                {"mode", to_string(s.mode)}, {"dropped", s.dropped}}
        .dump();
}

inline std::string error_message(const std::string& reason) { return json{{"type", "error"}, {"message", reason}}.dump(); }

}  // namespace voxbeam

#endif
