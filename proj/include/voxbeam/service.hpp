// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_SERVICE_HPP
#define VOXBEAM_SERVICE_HPP

#include <atomic>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "pipeline.hpp"
#include "protocol.hpp"

namespace voxbeam {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

/// Single-session WebSocket front end for FramePipeline.
///
/// Threads: `run()` drives the io_context (accept, reads, writes); a
/// separate executor renders frames one after another. Control messages
/// land in a pending-state slot that the executor copies once per frame.
/// Outgoing frames go through a one-slot mailbox: a frame that has not
/// started sending when the next one is ready is dropped.
class Service {
public:
    Service(SessionConfig cfg, SceneAssets assets, uint16_t port, Encoding encoding = Encoding::Png)
        : cfg_(std::move(cfg)), assets_(std::move(assets)), envs_(cfg_), encoding_(encoding),
          acceptor_(ioc_, tcp::endpoint(net::ip::make_address("127.0.0.1"), port)) {
        if (!cfg_.output_dir.empty()) fs::create_directories(cfg_.resolve(cfg_.output_dir));
    }

    ~Service() {
        if (executor_.joinable()) {
            {
                std::lock_guard lk(mu_);
                stopping_ = true;
            }
            cv_.notify_all();
            executor_.join();
        }
    }

    uint16_t port() const { return acceptor_.local_endpoint().port(); }

    /// Serves until stop(). Sessions are accepted one at a time.
    void run() {
        executor_ = std::thread([this] { executor_loop(); });
        accept();
        ioc_.run();
        {
            std::lock_guard lk(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        executor_.join();
    }

    void stop() {
        net::post(ioc_, [this] {
            beast::error_code ec;
            acceptor_.close(ec);
            if (session_) session_->close();
            ioc_.stop();
        });
    }

    /// Frames rendered so far across all sessions (for tests).
    uint64_t frames_rendered() const { return frames_rendered_.load(); }

private:
    struct Bundle {
        std::vector<uint8_t> left, right;
        std::string stats;
    };

    struct LiveState {
        Pose pose;
        std::deque<Pose> pose_queue;  // lockstep only
        Vec3d offset;
        RenderMode mode = RenderMode::VptEnv;
        std::optional<RadianceMap> env;
        std::optional<TransferFunction> tf;
        BilateralParams denoiser;
        ReprojectionParams reprojection;
        Extremal extremal = Extremal::Min;
    };

    LiveState initial_state() const {
        LiveState s;
        s.pose = cfg_.initial_pose;
        s.offset = cfg_.volume_offset;
        s.mode = cfg_.mode;
        s.denoiser = cfg_.denoiser;
        s.reprojection = cfg_.reprojection;
        s.extremal = cfg_.extremal;
        return s;
    }

    class Session : public std::enable_shared_from_this<Session> {
    public:
        Session(Service& owner, tcp::socket socket) : owner_(owner), ws_(std::move(socket)) {}

        void start() {
            ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
                if (ec) return self->finish();
                self->owner_.session_opened();
                self->read();
            });
        }

        void send_text(std::string text) {
            replies_.push_back(std::move(text));
            pump();
        }

        /// Writes whatever is due: control replies first, then the parts of
        /// the current frame bundle in L, R, stats order.
        void pump() {
            if (writing_ || closed_) return;
            if (!replies_.empty()) {
                auto msg = std::make_shared<std::string>(std::move(replies_.front()));
                replies_.pop_front();
                write(true, net::buffer(*msg), msg);
                return;
            }
            if (part_ == 0) {
                std::optional<Bundle> b = owner_.take_bundle();
                if (!b) return;
                current_ = std::move(*b);
            }
            int part = part_;
            part_ = (part_ + 1) % 3;
            if (part == 0) write(false, net::buffer(current_.left), nullptr);
            else if (part == 1) write(false, net::buffer(current_.right), nullptr);
            else write(true, net::buffer(current_.stats), nullptr);
        }

        void close() {
            if (closed_) return;
            beast::error_code ec;
            beast::get_lowest_layer(ws_).socket().close(ec);
        }

    private:
        void read() {
            ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, size_t) {
                if (ec) return self->finish();
                bool text = self->ws_.got_text();
                std::string data = beast::buffers_to_string(self->buf_.data());
                self->buf_.consume(self->buf_.size());
                self->owner_.handle_message(*self, text, std::move(data));
                self->read();
            });
        }

        template <class Buffer>
        void write(bool text, Buffer buffer, std::shared_ptr<std::string> keep) {
            writing_ = true;
            ws_.text(text);
            ws_.async_write(buffer, [self = shared_from_this(), keep](beast::error_code ec, size_t) {
                self->writing_ = false;
                if (ec) return self->finish();
                self->pump();
            });
        }

        void finish() {
            if (closed_) return;
            closed_ = true;
            owner_.session_closed(this);
        }

        Service& owner_;
        websocket::stream<beast::tcp_stream> ws_;
        beast::flat_buffer buf_;
        std::deque<std::string> replies_;
        Bundle current_;
        int part_ = 0;
        bool writing_ = false;
        bool closed_ = false;
    };

    void accept() {
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            if (session_) {
                // Single session: refuse newcomers while one is live.
                beast::error_code ignore;
                socket.close(ignore);
            } else {
                session_ = std::make_shared<Session>(*this, std::move(socket));
                session_->start();
            }
            accept();
        });
    }

    void session_opened() {
        {
            std::lock_guard lk(mu_);
            state_ = initial_state();
            outbox_.reset();
            dropped_ = 0;
            ++generation_;
            active_ = true;
        }
        cv_.notify_all();
    }

    void session_closed(Session* s) {
        {
            std::lock_guard lk(mu_);
            active_ = false;
            outbox_.reset();
        }
        if (session_.get() == s) session_.reset();
    }

    std::optional<Bundle> take_bundle() {
        std::lock_guard lk(mu_);
        std::optional<Bundle> b = std::move(outbox_);
        outbox_.reset();
        return b;
    }

    /// Runs on the io thread. Everything is validated here so a bad message
    /// gets an immediate error reply and never reaches the executor.
    void handle_message(Session& s, bool text, std::string data) {
        try {
            if (!text) {
                ImageRgb img = decode_png_bytes(data);
                if (img.width != 2 * img.height) throw Error("uploaded panorama must be 2:1");
                uint32_t id = next_upload_id_++;
                uploads_.emplace(id, resize_panorama(RadianceMap(std::move(img), MapKind::Ldr, MapFrame::World), cfg_.pano_width));
                s.send_text(json{{"type", "env_uploaded"}, {"id", id}}.dump());
                return;
            }
            ControlMessage m = parse_control(data);
            std::unique_lock lk(mu_);
            LiveState& st = state_;
            if (auto* p = std::get_if<PoseMsg>(&m)) {
                if (cfg_.pacing == Pacing::Lockstep) st.pose_queue.push_back(p->pose);
                else st.pose = p->pose;
            } else if (auto* o = std::get_if<VolumeOffsetMsg>(&m)) {
                st.offset = o->offset;
            } else if (auto* md = std::get_if<ModeMsg>(&m)) {
                st.mode = md->mode;
            } else if (auto* e = std::get_if<EnvMsg>(&m)) {
                if (e->upload_id) {
                    auto it = uploads_.find(*e->upload_id);
                    if (it == uploads_.end()) throw Error("env: unknown upload id " + std::to_string(*e->upload_id));
                    st.env = it->second;
                } else {
                    st.env = presets::panorama(e->preset, cfg_.pano_width);
                }
            } else if (auto* t = std::get_if<TfMsg>(&m)) {
                st.tf = presets::transfer_function(t->preset);
            } else if (auto* pr = std::get_if<ParamsMsg>(&m)) {
                apply_denoiser_json(pr->overrides, st.denoiser, st.reprojection, st.extremal);
            }
            lk.unlock();
            cv_.notify_all();
        } catch (const std::exception& e) {
            s.send_text(error_message(e.what()));
        }
    }

    static ImageRgb decode_png_bytes(const std::string& data) {
        return rgb8_to_float(decode_png(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(data.data()), data.size())));
    }

    void executor_loop() {
        std::unique_ptr<FramePipeline> pipeline;
        uint64_t generation = 0;
        while (true) {
            LiveState snap;
            {
                std::unique_lock lk(mu_);
                cv_.wait(lk, [&] {
                    if (stopping_) return true;
                    if (!active_) return false;
                    return cfg_.pacing == Pacing::Free || !state_.pose_queue.empty();
                });
                if (stopping_) return;
                if (generation != generation_) {
                    generation = generation_;
                    pipeline = std::make_unique<FramePipeline>(cfg_, assets_);
                }
                if (cfg_.pacing == Pacing::Lockstep) {
                    state_.pose = state_.pose_queue.front();
                    state_.pose_queue.pop_front();
                }
                snap = state_;
                snap.pose_queue.clear();
            }
            try {
                render_one(*pipeline, snap, generation);
            } catch (const std::exception& e) {
                std::string msg = e.what();
                net::post(ioc_, [this, msg] {
                    if (session_) session_->send_text(error_message("frame failed: " + msg));
                });
            }
        }
    }

    void render_one(FramePipeline& pipeline, const LiveState& st, uint64_t generation) {
        SessionConfig& c = pipeline.config();
        c.denoiser = st.denoiser;
        c.reprojection = st.reprojection;
        c.extremal = st.extremal;
        if (st.tf) pipeline.set_transfer_function(*st.tf);
        int t = pipeline.next_index();
        EnvCapture capture = st.env ? EnvCapture(*st.env) : envs_.capture(t);
        FrameResult r = pipeline.step(capture, {st.pose, st.offset, st.mode});
        ++frames_rendered_;
        if (!cfg_.output_dir.empty()) write_frame(cfg_.resolve(cfg_.output_dir), r, cfg_.dump_gbuffers);

        Bundle b;
        b.left = encode_packet(r.output(Eye::Left), uint32_t(r.index), Eye::Left, encoding_);
        b.right = encode_packet(r.output(Eye::Right), uint32_t(r.index), Eye::Right, encoding_);
        StatsMsg stats{uint32_t(r.index), r.diff.T, r.timings.env_ms, r.timings.render_ms, r.timings.denoise_ms, st.mode, 0};
        {
            std::lock_guard lk(mu_);
            if (!active_ || generation != generation_) return;
            if (outbox_) ++dropped_;
            stats.dropped = dropped_;
            b.stats = serialize_stats(stats);
            outbox_ = std::move(b);
        }
        net::post(ioc_, [this] {
            if (session_) session_->pump();
        });
    }

    SessionConfig cfg_;
    SceneAssets assets_;
    EnvProvider envs_;
    Encoding encoding_;

    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::shared_ptr<Session> session_;  // io thread only
    std::map<uint32_t, RadianceMap> uploads_;  // io thread only
    uint32_t next_upload_id_ = 1;

    std::mutex mu_;
    std::condition_variable cv_;
    LiveState state_;
    std::optional<Bundle> outbox_;
    uint32_t dropped_ = 0;
    uint64_t generation_ = 0;
    bool active_ = false;
    bool stopping_ = false;

    std::thread executor_;
    std::atomic<uint64_t> frames_rendered_{0};
};

}  // namespace voxbeam

#endif
