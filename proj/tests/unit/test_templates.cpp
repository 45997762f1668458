#include "motioncloud/error.hpp"
#include "motioncloud/flow.hpp"
#include "motioncloud/image.hpp"
#include "motioncloud/templates.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <unistd.h>

using namespace motioncloud;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("mc_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<double> component_errors(const FlowField& f, const Frame& mask_frame, double du, double dv, bool u_axis,
                                     int x0, int y0, int side, int margin) {
    std::vector<double> errs;
    (void)mask_frame;
    for (int r = 0; r < f.rows; ++r) {
        for (int c = 0; c < f.cols; ++c) {
            const double x = f.node_x(c), y = f.node_y(r);
            if (x < x0 + margin || x > x0 + side - margin || y < y0 + margin || y > y0 + side - margin) continue;
            errs.push_back(u_axis ? std::abs(f.at(c, r).u - du) : std::abs(f.at(c, r).v - dv));
        }
    }
    return errs;
}

double median(std::vector<double> v) {
    REQUIRE(!v.empty());
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("templates") {
    TEST_CASE("load_sequence resizes 320x240 PGM clips to 256x256") {
        TempDir dir("load");
        for (int i = 0; i < 40; ++i) {
            Frame f(320, 240, static_cast<std::uint8_t>(i));
            char name[32];
            std::snprintf(name, sizeof name, "f%03d.pgm", i);
            write_pgm(f, dir.path / name);
        }
        const FrameSequence seq = load_sequence(dir.path);
        CHECK(seq.size() == 40);
        for (const auto& f : seq.frames) {
            CHECK(f.width == 256);
            CHECK(f.height == 256);
        }
        // lexicographic order survives
        CHECK(seq.frames[7].at(100, 100) == 7);
    }

    TEST_CASE("a single image is rejected") {
        TempDir dir("single");
        write_pgm(Frame(64, 64, 1), dir.path / "a.pgm");
        CHECK_THROWS_WITH_AS(load_sequence(dir.path), doctest::Contains("insufficient frames"), InvalidArgument);
    }

    TEST_CASE("missing directory and mixed dimensions are errors") {
        CHECK_THROWS_AS(load_sequence("/nonexistent/clip"), IoError);
        TempDir dir("mixed");
        write_pgm(Frame(64, 64, 1), dir.path / "a.pgm");
        write_pgm(Frame(80, 64, 1), dir.path / "b.pgm");
        CHECK_THROWS_AS(load_sequence(dir.path), InvalidArgument);
    }

    TEST_CASE("256x256 grayscale passes through unchanged") {
        mctest::SplitMix rng(3);
        Frame f(256, 256);
        for (auto& p : f.pixels) p = static_cast<std::uint8_t>(rng.integer(0, 255));
        CHECK(resize_frame(f, {256, 256}) == f);
    }

    TEST_CASE("PNG round trip and RGB luma conversion") {
        TempDir dir("png");
        Frame f(31, 17);
        for (int i = 0; i < static_cast<int>(f.pixels.size()); ++i) f.pixels[static_cast<std::size_t>(i)] = i % 251;
        write_png(f, dir.path / "a.png");
        CHECK(read_image(dir.path / "a.png") == f);
        CHECK(decode_image(encode_pgm(f)) == f);
    }

    TEST_CASE("corrupt image bytes raise IoError") {
        const std::vector<std::uint8_t> junk{'P', '5', '\n', 'x'};
        CHECK_THROWS_AS(decode_image(junk), IoError);
    }

    TEST_CASE("a (3,0) shift of a textured square is recovered within 0.5 px") {
        const Frame a = mctest::textured_square(128, 32, 32, 64, 0, 0, 11);
        const Frame b = mctest::textured_square(128, 32, 32, 64, 3, 0, 11);
        const FlowField f = dense_flow(a, b);
        int inside = 0;
        for (int r = 0; r < f.rows; ++r) {
            for (int c = 0; c < f.cols; ++c) {
                const double x = f.node_x(c), y = f.node_y(r);
                if (x < 32 + 10 || x > 96 - 10 || y < 32 + 10 || y > 96 - 10) continue;
                ++inside;
                CHECK(std::abs(f.at(c, r).u - 3.0) <= 0.5);
                CHECK(std::abs(f.at(c, r).v) <= 0.5);
            }
        }
        CHECK(inside > 10);
    }

    TEST_CASE("identical frames give zero flow") {
        const Frame a = mctest::textured_frame(96, 0, 0, 5);
        for (const auto& v : dense_flow(a, a).vectors) {
            CHECK(v.u == 0.0);
            CHECK(v.v == 0.0);
        }
    }

    TEST_CASE("uniform frames give zero flow through the texture gate") {
        const Frame a(96, 96, 80), b(96, 96, 120);
        for (const auto& v : dense_flow(a, b).vectors) {
            CHECK(v.u == 0.0);
            CHECK(v.v == 0.0);
        }
    }

    TEST_CASE("frames of different sizes are rejected") {
        CHECK_THROWS_AS(dense_flow(Frame(64, 64), Frame(64, 32)), InvalidArgument);
    }

    TEST_CASE("property: integer translations inside the capture range") {
        mctest::SplitMix rng(99);
        for (int trial = 0; trial < 12; ++trial) {
            const int dx = rng.integer(-6, 6);
            const int dy = rng.integer(-6, 6);
            const std::uint64_t seed = rng.next();
            const Frame a = mctest::noise_frame(128, 0, 0, seed);
            const Frame b = mctest::noise_frame(128, dx, dy, seed);
            const FlowField f = dense_flow(a, b);
            const auto eu = component_errors(f, a, dx, dy, true, 0, 0, 128, 20);
            const auto ev = component_errors(f, a, dx, dy, false, 0, 0, 128, 20);
            CAPTURE(dx);
            CAPTURE(dy);
            CHECK(median(eu) <= 0.5);
            CHECK(median(ev) <= 0.5);
        }
    }

    TEST_CASE("property: rotating the pair by 180 degrees negates the field") {
        const Frame a = mctest::textured_square(128, 30, 40, 60, 0, 0, 21);
        const Frame b = mctest::textured_square(128, 30, 40, 60, 2, -1, 21);
        auto rot = [](const Frame& f) {
            Frame out(f.width, f.height);
            for (int y = 0; y < f.height; ++y)
                for (int x = 0; x < f.width; ++x) out.at(f.width - 1 - x, f.height - 1 - y) = f.at(x, y);
            return out;
        };
        const FlowField f = dense_flow(a, b);
        const FlowField g = dense_flow(rot(a), rot(b));
        REQUIRE(f.cols == g.cols);
        for (int r = 0; r < f.rows; ++r) {
            for (int c = 0; c < f.cols; ++c) {
                const FlowVector& p = f.at(c, r);
                const FlowVector& q = g.at(f.cols - 1 - c, f.rows - 1 - r);
                CHECK(std::abs(p.u + q.u) <= 0.5);
                CHECK(std::abs(p.v + q.v) <= 0.5);
            }
        }
    }

    TEST_CASE("all-zero flow encodes to a black template") {
        const FlowField f = make_flow_grid(64, 64, 8);
        const MvfiTemplate t = encode_mvfi(f, {64, 64});
        CHECK(std::all_of(t.image.pixels.begin(), t.image.pixels.end(), [](auto p) { return p == 0; }));
    }

    TEST_CASE("a vector at the magnitude cap paints intensity 255") {
        FlowField f = make_flow_grid(64, 64, 8);
        f.at(3, 3) = {16.0, 0.0};
        const MvfiTemplate t = encode_mvfi(f, {64, 64});
        CHECK(t.image.at(static_cast<int>(f.node_x(3)), static_cast<int>(f.node_y(3))) == 255);
        CHECK(mvfi_intensity(16.0) == 255);
        CHECK(mvfi_intensity(0.5) == 64);
        CHECK(mvfi_intensity(100.0) == 255);
    }

    TEST_CASE("overlapping boxes keep the faster vector on top") {
        FlowField f = make_flow_grid(64, 64, 8);
        f.at(3, 3) = {10.0, 0.0};
        f.at(4, 3) = {2.0, 0.0};
        const MvfiTemplate t = encode_mvfi(f, {64, 64});
        // midway between the two nodes both boxes cover the pixel
        const int x = static_cast<int>((f.node_x(3) + f.node_x(4)) / 2);
        const int y = static_cast<int>(f.node_y(3));
        CHECK(t.image.at(x, y) == mvfi_intensity(10.0));
        // swapping the magnitudes puts the other box on top
        std::swap(f.at(3, 3), f.at(4, 3));
        CHECK(encode_mvfi(f, {64, 64}).image.at(x, y) == mvfi_intensity(10.0));
    }

    TEST_CASE("box orientation follows the flow direction") {
        FlowField h = make_flow_grid(64, 64, 8);
        h.at(4, 4) = {6.0, 0.0};
        FlowField v = make_flow_grid(64, 64, 8);
        v.at(4, 4) = {0.0, 6.0};
        auto extent = [](const Frame& img, bool horizontal) {
            int n = 0;
            for (int i = 0; i < 64; ++i) n += (horizontal ? img.at(i, 36) : img.at(36, i)) > 0;
            return n;
        };
        const Frame hi = encode_mvfi(h, {64, 64}).image;
        const Frame vi = encode_mvfi(v, {64, 64}).image;
        CHECK(extent(hi, true) > extent(hi, false));
        CHECK(extent(vi, false) > extent(vi, true));
    }

    TEST_CASE("sequence_templates yields one template per frame pair") {
        FrameSequence seq;
        for (int i = 0; i < 40; ++i) seq.frames.push_back(mctest::textured_square(64, 10, 10, 30, i % 3, 0, 1));
        CHECK(sequence_templates(seq).size() == 39);
    }

    TEST_CASE("static sequences give black templates, deterministically") {
        FrameSequence seq;
        for (int i = 0; i < 10; ++i) seq.frames.push_back(mctest::textured_frame(64, 0, 0, 2));
        const auto t = sequence_templates(seq);
        REQUIRE(t.size() == 9);
        for (const auto& m : t) CHECK(std::all_of(m.image.pixels.begin(), m.image.pixels.end(), [](auto p) { return p == 0; }));

        FrameSequence moving;
        for (int i = 0; i < 6; ++i) moving.frames.push_back(mctest::textured_square(64, 10, 10, 30, i, i / 2, 8));
        CHECK(sequence_templates(moving) == sequence_templates(moving));
    }

    TEST_CASE("flatten_template block-averages") {
        MvfiTemplate t{Frame(4, 4, 0)};
        t.image.at(0, 0) = 40;
        t.image.at(1, 1) = 80;
        const Eigen::VectorXd v = flatten_template(t, 2);
        REQUIRE(v.size() == 4);
        CHECK(v(0) == doctest::Approx(30.0));
        CHECK(v(1) == 0.0);
    }
}
