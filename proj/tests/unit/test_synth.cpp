#include "motioncloud/error.hpp"
#include "motioncloud/file_util.hpp"
#include "motioncloud/flow.hpp"
#include "motioncloud/synth.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace motioncloud;

namespace {

struct Motion {
    double mean_abs_u = 0.0;
    double mean_abs_v = 0.0;
    double mean_magnitude = 0.0;  // over moving nodes only
};

Motion measure(const FrameSequence& seq) {
    Motion m;
    int moving = 0;
    int nodes = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
        const FlowField f = dense_flow(seq.frames[i - 1], seq.frames[i]);
        for (const auto& v : f.vectors) {
            const double mag = std::hypot(v.u, v.v);
            m.mean_abs_u += std::abs(v.u);
            m.mean_abs_v += std::abs(v.v);
            ++nodes;
            if (mag > 0.5) {
                m.mean_magnitude += mag;
                ++moving;
            }
        }
    }
    m.mean_abs_u /= std::max(nodes, 1);
    m.mean_abs_v /= std::max(nodes, 1);
    m.mean_magnitude /= std::max(moving, 1);
    return m;
}

}  // namespace

TEST_SUITE("synth") {
    TEST_CASE("names round-trip and unknown names are rejected") {
        for (auto k : {ActionKind::wave, ActionKind::bounce, ActionKind::walk, ActionKind::run}) {
            CHECK(action_kind_from_string(to_string(k)) == k);
        }
        CHECK_THROWS_AS(action_kind_from_string("jump"), InvalidArgument);
    }

    TEST_CASE("rendering is deterministic in the seed") {
        SynthSpec spec;
        spec.frames = 6;
        spec.size = {96, 96};
        for (auto k : {ActionKind::wave, ActionKind::bounce, ActionKind::walk, ActionKind::run}) {
            const auto a = render_clip(k, 2, spec);
            const auto b = render_clip(k, 2, spec);
            REQUIRE(a.size() == 6);
            CHECK(a.width() == 96);
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.frames[i] == b.frames[i]);
            const auto other_clip = render_clip(k, 3, spec);
            CHECK_FALSE(other_clip.frames[0] == a.frames[0]);
            auto reseeded = spec;
            reseeded.seed = 8;
            CHECK_FALSE(render_clip(k, 2, reseeded).frames[0] == a.frames[0]);
        }
        CHECK(render_static_clip(4, {64, 64}, 1).frames[0] == render_static_clip(4, {64, 64}, 1).frames[3]);
    }

    TEST_CASE("generated datasets are byte-identical for one seed and load back") {
        SynthSpec spec;
        spec.classes = {ActionKind::wave, ActionKind::run};
        spec.clips_per_class = 2;
        spec.frames = 3;
        spec.size = {48, 48};
        mctest::ScratchDir a("synth_a");
        mctest::ScratchDir b("synth_b");
        const auto clips = generate_clips(spec, a.path);
        generate_clips(spec, b.path);
        REQUIRE(clips.size() == 4);
        for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path)) {
            if (!entry.is_regular_file()) continue;
            const auto rel = std::filesystem::relative(entry.path(), a.path);
            CHECK(read_binary(entry.path()) == read_binary(b.path / rel));
        }
        CHECK(std::filesystem::exists(a.path / "run" / "run_001" / "frame_00002.pgm"));

        const auto loaded = load_dataset(a.path);
        REQUIRE(loaded.size() == 4);
        CHECK(loaded[0].label == "wave");
        CHECK(loaded[3].clip_id == "run_001");

        std::filesystem::remove(b.path / "manifest.json");
        const auto scanned = load_dataset(b.path);
        REQUIRE(scanned.size() == 4);
        CHECK(scanned[0].label == "run");  // lexicographic without a manifest
        CHECK(load_sequence(scanned[0].directory).size() == 3);

        {
            std::ofstream bad(a.path / "manifest.json");
            bad << "{ not json";
        }
        CHECK_THROWS_AS(load_dataset(a.path), IoError);
        CHECK_THROWS_AS(load_dataset(a.path / "nope"), IoError);
    }

    TEST_CASE("invalid specs are rejected") {
        SynthSpec spec;
        spec.frames = 1;
        mctest::ScratchDir dir("synth_bad");
        CHECK_THROWS_AS(generate_clips(spec, dir.path), InvalidArgument);
    }

    TEST_CASE("run moves faster than walk; wave and bounce move on orthogonal axes") {
        SynthSpec spec;
        spec.frames = 12;
        const Motion walk = measure(render_clip(ActionKind::walk, 0, spec));
        const Motion run = measure(render_clip(ActionKind::run, 0, spec));
        CHECK(run.mean_magnitude > 2.0 * walk.mean_magnitude);

        const Motion wave = measure(render_clip(ActionKind::wave, 0, spec));
        const Motion bounce = measure(render_clip(ActionKind::bounce, 0, spec));
        CHECK(wave.mean_abs_u > 3.0 * wave.mean_abs_v);
        CHECK(bounce.mean_abs_v > 3.0 * bounce.mean_abs_u);
    }
}
