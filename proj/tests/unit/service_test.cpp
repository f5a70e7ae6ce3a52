// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "voxbeam/service.hpp"

using namespace voxbeam;

namespace {

fs::path scratch_dir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    fs::path p = fs::temp_directory_path() / "voxbeam_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SessionConfig tiny_config() {
    return config_from_json({{"volume", {{"size", 16}}},
                             {"width", 16},
                             {"height", 16},
                             {"spp", 1},
                             {"pano_width", 32},
                             {"grid_n", 4},
                             {"mode", "ABSORPTION_EMISSION"}});
}

// Service running on its own thread; stopped and joined on scope exit.
struct Running {
    Service service;
    std::thread thread;
    explicit Running(SessionConfig cfg, Encoding enc = Encoding::Raw)
        : service(cfg, load_scene_assets(cfg), 0, enc), thread([this] { service.run(); }) {}
    ~Running() {
        service.stop();
        thread.join();
    }
};

struct Message {
    bool text = false;
    std::string data;
    std::vector<uint8_t> bytes() const { return {data.begin(), data.end()}; }
    json parsed() const { return json::parse(data); }
};

struct Client {
    net::io_context ioc;
    websocket::stream<tcp::socket> ws{ioc};

    explicit Client(uint16_t port) {
        ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
        ws.handshake("127.0.0.1", "/");
    }
    ~Client() {
        beast::error_code ec;
        ws.close(websocket::close_code::normal, ec);
    }
    Message read() {
        beast::flat_buffer buf;
        ws.read(buf);
        return {ws.got_text(), beast::buffers_to_string(buf.data())};
    }
    void send(const std::string& text) {
        ws.text(true);
        ws.write(net::buffer(text));
    }
    void send_binary(const std::vector<uint8_t>& bytes) {
        ws.binary(true);
        ws.write(net::buffer(bytes));
    }
    // Next text message of the given type, skipping everything else.
    json next(const std::string& type, int limit = 500) {
        for (int i = 0; i < limit; ++i) {
            Message m = read();
            if (m.text && m.parsed()["type"] == type) return m.parsed();
        }
        throw Error("no '" + type + "' message");
    }
};

}  // namespace

TEST(Service, StreamsOrderedFrameBundles) {
    Running r(tiny_config());
    Client c(r.service.port());
    int64_t last = -1;
    for (int k = 0; k < 4; ++k) {
        Message l = c.read();
        ASSERT_FALSE(l.text);
        FramePacket pl = decode_packet(l.bytes());
        Message rr = c.read();
        ASSERT_FALSE(rr.text);
        FramePacket pr = decode_packet(rr.bytes());
        Message st = c.read();
        ASSERT_TRUE(st.text);
        EXPECT_EQ(pl.eye, Eye::Left);
        EXPECT_EQ(pr.eye, Eye::Right);
        EXPECT_EQ(pl.frame_id, pr.frame_id);
        EXPECT_EQ(pl.width, 16);
        EXPECT_EQ(st.parsed()["frame"], pl.frame_id);
        EXPECT_EQ(st.parsed()["mode"], "ABSORPTION_EMISSION");
        EXPECT_GT(int64_t(pl.frame_id), last);
        last = pl.frame_id;
    }
}

TEST(Service, ModeSwitchShowsInStats) {
    Running r(tiny_config());
    Client c(r.service.port());
    c.next("stats");
    c.send(serialize_control(ModeMsg{RenderMode::GradientPhong}));
    bool seen = false;
    for (int i = 0; i < 20 && !seen; ++i) seen = c.next("stats")["mode"] == "GRADIENT_PHONG";
    EXPECT_TRUE(seen);
}

TEST(Service, MalformedMessageGetsErrorAndSessionContinues) {
    Running r(tiny_config());
    Client c(r.service.port());
    c.send("{not json");
    json err = c.next("error");
    EXPECT_FALSE(err["message"].get<std::string>().empty());
    c.send(R"({"type":"mode","mode":"WARP"})");
    c.next("error");
    c.send(R"({"type":"params","radius":-3})");
    c.next("error");
    // Still streaming afterwards.
    uint32_t a = c.next("stats")["frame"];
    uint32_t b = c.next("stats")["frame"];
    EXPECT_GT(b, a);
}

TEST(Service, PanoramaUpload) {
    Running r(tiny_config());
    Client c(r.service.port());
    ImageRgb pano(32, 16, Rgb(0.25f));
    c.send_binary(encode_png(float_to_rgb8(pano)));
    json up = c.next("env_uploaded");
    uint32_t id = up["id"];
    EXPECT_EQ(id, 1u);
    c.send(serialize_control(EnvMsg{"", id}));
    c.send(serialize_control(EnvMsg{"", 99u}));
    json err = c.next("error");
    EXPECT_NE(err["message"].get<std::string>().find("99"), std::string::npos);
    c.send_binary({1, 2, 3});
    c.next("error");
    c.next("stats");
}

TEST(Service, SecondConnectionIsRefused) {
    Running r(tiny_config());
    Client c(r.service.port());
    c.next("stats");
    EXPECT_ANY_THROW(Client(r.service.port()));
    c.next("stats");
}

TEST(Service, NewSessionRestartsAtFrameZero) {
    Running r(tiny_config());
    {
        Client c(r.service.port());
        c.next("stats");
        c.next("stats");
    }
    // The server notices the close asynchronously; retry the handshake.
    std::unique_ptr<Client> c;
    for (int i = 0; i < 100 && !c; ++i) {
        try {
            c = std::make_unique<Client>(r.service.port());
        } catch (const std::exception&) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }
    ASSERT_TRUE(c);
    EXPECT_EQ(c->next("stats")["frame"], 0);
}

TEST(Service, LockstepReplayMatchesOfflineRender) {
    fs::path dir = scratch_dir();
    SessionConfig cfg = tiny_config();
    cfg.mode = RenderMode::VptEnv;
    cfg.camera_path = orbit_path({{0, 0, 0}, 2.0, 15, 0, 8, 4});
    cfg.output_dir = dir / "offline";
    run_offline(cfg);

    SessionConfig live = cfg;
    live.output_dir = dir / "live";
    live.pacing = Pacing::Lockstep;
    std::vector<std::vector<uint8_t>> left(cfg.camera_path.size());
    {
        Running r(live, Encoding::Raw);
        Client c(r.service.port());
        for (const Pose& p : cfg.camera_path) c.send(serialize_control(PoseMsg{p}));
        for (size_t seen = 0; seen < cfg.camera_path.size();) {
            Message m = c.read();
            if (m.text) {
                json j = m.parsed();
                ASSERT_EQ(j["type"], "stats") << m.data;
                ++seen;
                if (j["frame"] == int(cfg.camera_path.size()) - 1) break;
            } else {
                FramePacket p = decode_packet(m.bytes());
                if (p.eye == Eye::Left) left[p.frame_id] = m.bytes();
            }
        }
        EXPECT_EQ(r.service.frames_rendered(), cfg.camera_path.size());
    }
    for (int t = 0; t < int(cfg.camera_path.size()); ++t) {
        for (Eye e : {Eye::Left, Eye::Right}) {
            for (const char* ext : {".pfm", ".png"}) {
                std::string name = eye_file(t, e, "", ext);
                EXPECT_EQ(read_file_bytes(dir / "offline" / name), read_file_bytes(dir / "live" / name)) << name;
            }
        }
        if (!left[size_t(t)].empty()) {
            ImageRgb img = read_pfm(dir / "offline" / eye_file(t, Eye::Left, "", ".pfm"));
            EXPECT_EQ(left[size_t(t)], encode_packet(img, uint32_t(t), Eye::Left, Encoding::Raw));
        }
    }
}
