// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "voxbeam/image_io.hpp"
#include "voxbeam/math.hpp"
#include "voxbeam/parallel.hpp"
#include "voxbeam/rng.hpp"

using namespace voxbeam;

TEST(Quat, RotationMatchesAxisAngleFormula) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int n = 0; n < 100; ++n) {
        Vec3d axis = normalize(Vec3d(u(rng), u(rng), u(rng)));
        double angle = 3 * u(rng);
        Vec3d v{u(rng), u(rng), u(rng)};
        // Rodrigues
        Vec3d expect = v * std::cos(angle) + cross(axis, v) * std::sin(angle) + axis * (dot(axis, v) * (1 - std::cos(angle)));
        Vec3d got = Quat::from_axis_angle(axis, angle).rotate(v);
        EXPECT_NEAR(length(got - expect), 0.0, 1e-12);
    }
}

TEST(Quat, CompositionAppliesRightFirst) {
    Quat a = Quat::from_axis_angle({0, 1, 0}, 0.4), b = Quat::from_axis_angle({1, 0, 0}, -0.9);
    Vec3d v{0.3, -0.2, 0.9};
    EXPECT_NEAR(length((a * b).rotate(v) - a.rotate(b.rotate(v))), 0.0, 1e-12);
}

TEST(LookRotation, ForwardIsMinusZ) {
    Quat q = look_rotation(normalize(Vec3d(1, -0.5, 0.2)), {0, 1, 0});
    EXPECT_NEAR(length(q.rotate({0, 0, -1}) - normalize(Vec3d(1, -0.5, 0.2))), 0.0, 1e-12);
    EXPECT_NEAR(q.rotate({1, 0, 0}).y, 0.0, 1e-12);  // no roll
}

TEST(Bounds, SlabIntersection) {
    Bounds3 b{{-1, -1, -1}, {1, 1, 1}};
    double t0, t1;
    ASSERT_TRUE(b.intersect({{0, 0, 5}, {0, 0, -1}}, t0, t1));
    EXPECT_DOUBLE_EQ(t0, 4);
    EXPECT_DOUBLE_EQ(t1, 6);
    ASSERT_TRUE(b.intersect({{0, 0, 0}, {1, 0, 0}}, t0, t1));
    EXPECT_DOUBLE_EQ(t0, 0);
    EXPECT_FALSE(b.intersect({{0, 3, 5}, {0, 0, -1}}, t0, t1));
    EXPECT_FALSE(b.intersect({{0, 0, 5}, {0, 0, 1}}, t0, t1));
}

TEST(Rng, KeyedStreamsAreReproducibleAndDistinct) {
    Rng a = Rng::keyed({1, 2, 3}), b = Rng::keyed({1, 2, 3}), c = Rng::keyed({1, 2, 4});
    for (int i = 0; i < 100; ++i) {
        uint32_t x = a.next_u32();
        EXPECT_EQ(x, b.next_u32());
    }
    Rng a2 = Rng::keyed({1, 2, 3});
    int same = 0;
    for (int i = 0; i < 100; ++i) same += a2.next_u32() == c.next_u32();
    EXPECT_LT(same, 3);
}

TEST(Rng, UniformMomentsAndRange) {
    Rng r = Rng::keyed({42});
    double sum = 0, sq = 0;
    int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.005);
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
}

TEST(Parallel, CoversEveryIndexOnceAndPropagatesErrors) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(1000, [&](int i) { hits[size_t(i)]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(100, [](int i) {
                     if (i == 57) throw Error("boom");
                 }),
                 Error);
}

TEST(Pfm, HeaderLayoutAndRowOrder) {
    ImageRgb img(2, 2);
    img(0, 0) = {1, 2, 3};  // top row
    img(1, 1) = {4, 5, 6};  // bottom row
    std::vector<uint8_t> bytes = encode_pfm(img);
    std::string header = "PF\n2 2\n-1.0\n";
    ASSERT_GE(bytes.size(), header.size() + 48);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + std::ptrdiff_t(header.size())), header);
    // First stored row is the bottom one: pixel (0, 1) then (1, 1).
    float f[6];
    std::memcpy(f, bytes.data() + header.size(), sizeof f);
    EXPECT_EQ(f[3], 4.0f);
    EXPECT_EQ(f[5], 6.0f);
    EXPECT_EQ(decode_pfm(bytes), img);
}

TEST(Pfm, RoundTripRandomAndTruncation) {
    std::mt19937 rng(2);
    std::uniform_real_distribution<float> u(0, 100);
    ImageRgb img(7, 5);
    for (Rgb& c : img.pixels) c = {u(rng), u(rng), u(rng)};
    auto bytes = encode_pfm(img);
    EXPECT_EQ(decode_pfm(bytes), img);
    bytes.resize(bytes.size() - 4);
    try {
        decode_pfm(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("420"), std::string::npos) << e.what();
    }
}

TEST(Pfm, BigEndianAndGrayscaleAreRead) {
    std::string header = "Pf\n1 1\n1.0\n";
    std::vector<uint8_t> bytes(header.begin(), header.end());
    float v = 0.75f;
    uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    for (int i = 3; i >= 0; --i) bytes.push_back(raw[i]);
    ImageRgb img = decode_pfm(bytes);
    EXPECT_EQ(img(0, 0), Rgb(0.75f));
}

TEST(Png, RoundTripIsExact) {
    std::mt19937 rng(3);
    Rgb8Image img{9, 4, std::vector<uint8_t>(9 * 4 * 3)};
    for (auto& b : img.bytes) b = uint8_t(rng());
    EXPECT_EQ(decode_png(encode_png(img)), img);
    EXPECT_THROW(decode_png(std::vector<uint8_t>{1, 2, 3}), Error);
}

TEST(Tonemap, ReinhardThenGamma) {
    ImageRgb img(2, 1);
    img(0, 0) = Rgb(1.0f);  // 1 / 2 = 0.5 -> 0.5^(1/2.2)
    img(1, 0) = Rgb(0.0f);
    Rgb8Image t = tonemap(img);
    EXPECT_EQ(t.bytes[0], uint8_t(std::lround(std::pow(0.5, 1 / 2.2) * 255)));
    EXPECT_EQ(t.bytes[3], 0);
}
